// Order two registers with a by-reference swap helper.

int a;
int b;

void swap(int *p, int *q) {
  int t = *p;
  *p = *q;
  *q = t;
}

void order(int *lo, int *hi) {
  if (*lo > *hi) {
    swap(lo, hi);
  }
}

/*@ requires -1000 <= a && a <= 1000 && -1000 <= b && b <= 1000;
    ensures a <= b;
    ensures a + b == \old(a) + \old(b);
*/
void main() {
  int x = a;
  int y = b;
  order(&x, &y);
  a = x;
  b = y;
}
