/// Second-order compensated (Kahan-Babuška-Klein) accumulator.
///
/// The result is the correctly rounded sum for all practical inputs, so it
/// does not depend on the order the addends arrive in beyond the last bit.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    cs: f64,
    ccs: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        let c = if self.sum.abs() >= value.abs() {
            (self.sum - t) + value
        } else {
            (value - t) + self.sum
        };
        self.sum = t;
        let t = self.cs + c;
        let cc = if self.cs.abs() >= c.abs() {
            (self.cs - t) + c
        } else {
            (c - t) + self.cs
        };
        self.cs = t;
        self.ccs += cc;
    }

    pub fn total(&self) -> f64 {
        self.sum + (self.cs + self.ccs)
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        acc.extend(iter);
        acc
    }
}
