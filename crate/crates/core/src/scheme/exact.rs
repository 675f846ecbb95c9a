//! Double-double accumulation for residuals.

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    /// `a·x`, exactly.
    pub(crate) fn product(a: f64, x: f64) -> Self {
        let (hi, lo) = two_prod(a, x);
        Self { hi, lo }
    }

    /// `a·x − b·y` to about twice working precision.
    pub(crate) fn product_difference(a: f64, x: f64, b: f64, y: f64) -> Self {
        let (p, e) = two_prod(a, x);
        let (q, f) = two_prod(b, y);
        let (s, g) = two_sum(p, -q);
        Self::normalized(s, g + (e - f))
    }

    pub(crate) fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub(crate) fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        Self::normalized(s, e + self.lo + other.lo)
    }

    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn normalized(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self {
            hi: s,
            lo: lo - (s - hi),
        }
    }
}
