// Sum the first n positive integers into total, then clip it for display.

int n;
int total;
int shown;

int clip(int v, int cap) {
  if (v > cap) return cap;
  return v;
}

/*@ requires 0 <= n && n <= 100;
    ensures 2 * total == n * (n + 1);
    ensures 0 <= shown && shown <= 1000;
*/
void main() {
  int i = 0;
  total = 0;
  /*@ loop invariant 0 <= i && i <= n && 2 * total == i * (i + 1); */
  while (i < n) {
    i = i + 1;
    total = total + i;
  }
  shown = clip(total, 1000);
}
