// Sensor conditioning unit: one periodic step of a small controller.
// Raw readings are clamped into their physical ranges, scaled, checked
// against alarm thresholds, and published to the output registers.
//
// Register map
//   raw_temp, raw_press, raw_flow  input registers written by the bus driver
//   temp, press, flow              conditioned values
//   alarm                          number of violated thresholds
//   status                         1 = nominal, 2 = alarm raised
//   ticks                          step counter
//   faults                         number of steps with an alarm raised

int raw_temp;
int raw_press;
int raw_flow;
int temp;
int press;
int flow;
int alarm;
int status;
int ticks;
int faults;

// Restrict v to [lo, hi].
int clamp(int v, int lo, int hi) {
  if (v < lo) {
    return lo;
  }
  if (v > hi) {
    return hi;
  }
  return v;
}

// Copy the raw registers into the caller's variables.
void read_sensors(int *t, int *p, int *f) {
  *t = raw_temp;
  *p = raw_press;
  *f = raw_flow;
}

// Convert a clamped pressure reading to the published unit.
int scale_pressure(int p) {
  int q = p * 2;
  return q;
}

// Number of violated thresholds: high temperature, high pressure, low flow.
int alarm_level(int t, int p, int f) {
  int level = 0;
  if (t > 80) {
    level = level + 1;
  }
  if (p > 150) {
    level = level + 1;
  }
  if (f < 5) {
    level = level + 1;
  }
  return level;
}

// Publish the alarm and derive the status register from it.
void publish(int level) {
  alarm = level;
  if (level > 0) {
    status = 2;
    faults = faults + 1;
  } else {
    status = 1;
  }
}

/*@ requires -1000 <= raw_temp && raw_temp <= 1000;
    requires -1000 <= raw_press && raw_press <= 1000;
    requires -1000 <= raw_flow && raw_flow <= 1000;
    requires 0 <= ticks && ticks <= 100000;
    requires 0 <= faults && faults <= ticks;
    ensures 0 <= temp && temp <= 100 && 0 <= press && press <= 200 && 0 <= flow && flow <= 50;
    ensures 0 <= alarm && alarm <= 3;
    ensures (temp > 80 || press > 150 || flow < 5 ==> alarm >= 1) && (temp <= 80 && press <= 150 && flow >= 5 ==> alarm == 0);
    ensures (alarm > 0 ==> status == 2 && faults == \old(faults) + 1) && (alarm == 0 ==> status == 1 && faults == \old(faults));
    ensures ticks == \old(ticks) + 1 && faults <= ticks;
    assigns temp, press, flow, alarm, status, ticks, faults;
*/
void main() {
  int t = 0;
  int p = 0;
  int f = 0;
  read_sensors(&t, &p, &f);

  // physical ranges of the three sensors
  t = clamp(t, 0, 100);
  p = clamp(p, 0, 100);
  f = clamp(f, 0, 50);

  // conditioned outputs
  temp = t;
  press = scale_pressure(p);
  flow = f;

  // thresholds
  int level = alarm_level(temp, press, flow);
  publish(level);

  ticks = ticks + 1;
}
