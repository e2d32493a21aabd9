//! Cascade (pairwise) summation.
//!
//! [`Cascade`] accumulates a stream of terms with the same rounding behaviour
//! as recursive pairwise summation over power-of-two blocks, using O(log n)
//! state. The result depends only on the order of the pushed terms.

#[derive(Clone, Debug)]
pub struct Cascade {
    partial: [f64; 64],
    occupied: u64,
}

impl Default for Cascade {
    fn default() -> Self {
        Self::new()
    }
}

impl Cascade {
    pub fn new() -> Self {
        Self {
            partial: [0.0; 64],
            occupied: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let mut carry = x;
        let mut level = 0;
        while self.occupied & (1 << level) != 0 {
            carry += self.partial[level];
            self.occupied &= !(1 << level);
            level += 1;
        }
        self.partial[level] = carry;
        self.occupied |= 1 << level;
    }

    pub fn total(&self) -> f64 {
        let mut acc = 0.0;
        let mut bits = self.occupied;
        while bits != 0 {
            let level = bits.trailing_zeros() as usize;
            acc += self.partial[level];
            bits &= bits - 1;
        }
        acc
    }
}

/// Pairwise sum of a slice.
pub fn cascade_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut c = Cascade::new();
    for t in terms {
        c.push(t);
    }
    c.total()
}

/// Component-wise cascade accumulator for small vectors.
#[derive(Clone, Debug)]
pub struct VecCascade {
    parts: Vec<Cascade>,
}

impl VecCascade {
    pub fn new(dim: usize) -> Self {
        Self {
            parts: vec![Cascade::new(); dim],
        }
    }

    #[inline]
    pub fn push(&mut self, v: &[f64]) {
        for (c, x) in self.parts.iter_mut().zip(v) {
            c.push(*x);
        }
    }

    #[inline]
    pub fn push_scaled(&mut self, scale: f64, v: &[f64]) {
        for (c, x) in self.parts.iter_mut().zip(v) {
            c.push(scale * x);
        }
    }

    pub fn write_total(&self, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.parts) {
            *o = c.total();
        }
    }

    pub fn total(&self) -> Vec<f64> {
        self.parts.iter().map(Cascade::total).collect()
    }
}
