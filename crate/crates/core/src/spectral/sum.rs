/// Neumaier compensated summation; fixed order, so results are reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of the moduli of everything added; scales the rounding bound.
    pub fn abs_total(&self) -> f64 {
        self.abs
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// (log |S|, sign S) for S = Σ sign_i · exp(log_i) given in log-space.
///
/// Returns `None` when the signed sum cancels to zero.
pub fn signed_log_sum_exp(terms: &[(f64, f64)]) -> Option<(f64, f64)> {
    let max = terms
        .iter()
        .filter(|(_, s)| *s != 0.0)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let acc: KahanSum = terms
        .iter()
        .filter(|(_, s)| *s != 0.0)
        .map(|(l, s)| s * (l - max).exp())
        .collect();
    let v = acc.value();
    if v == 0.0 {
        None
    } else {
        Some((max + v.abs().ln(), v.signum()))
    }
}
