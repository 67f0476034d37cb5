//! Continuous piecewise-linear functions on a closed interval `[0, len]`,
//! with exact breakpoints.

use crate::rat::Rat;

/// Breakpoints `(t, f(t))` in increasing `t`; linear in between. The first
/// breakpoint is at 0 and the last at the interval end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Pl {
    pts: Vec<(Rat, Rat)>,
}

impl Pl {
    pub fn constant(len: &Rat, c: Rat) -> Pl {
        if len.is_zero() {
            return Pl { pts: vec![(Rat::zero(), c)] };
        }
        Pl { pts: vec![(Rat::zero(), c.clone()), (len.clone(), c)] }
    }

    /// `a + b·t`.
    pub fn linear(len: &Rat, a: Rat, b: Rat) -> Pl {
        if len.is_zero() {
            return Pl { pts: vec![(Rat::zero(), a)] };
        }
        let end = &a + &b * len;
        Pl { pts: vec![(Rat::zero(), a), (len.clone(), end)] }
    }

    /// `h + |t - c|` with `c` inside the interval.
    pub fn vee(len: &Rat, c: &Rat, h: &Rat) -> Pl {
        let mut pts = vec![(Rat::zero(), h + c)];
        if c.is_positive() && c < len {
            pts.push((c.clone(), h.clone()));
        }
        if len.is_positive() {
            pts.push((len.clone(), h + (len - c).abs()));
        }
        Pl { pts }
    }

    #[cfg(test)]
    pub fn points(&self) -> &[(Rat, Rat)] {
        &self.pts
    }

    pub fn at(&self, t: &Rat) -> Rat {
        for w in self.pts.windows(2) {
            let ((t0, v0), (t1, v1)) = (&w[0], &w[1]);
            if t <= t1 {
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        self.pts.last().expect("nonempty").1.clone()
    }

    pub fn map(&self, f: impl Fn(&Rat) -> Rat) -> Pl {
        Pl { pts: self.pts.iter().map(|(t, v)| (t.clone(), f(v))).collect() }
    }

    /// Pointwise `op(self, other)` where `op` is linear wherever `f - g`
    /// keeps its sign (max, min, monus, abs of difference, sums).
    pub fn combine(&self, other: &Pl, op: impl Fn(&Rat, &Rat) -> Rat) -> Pl {
        let mut ts: Vec<Rat> = self.pts.iter().chain(other.pts.iter()).map(|(t, _)| t.clone()).collect();
        ts.sort();
        ts.dedup();
        let mut all = Vec::with_capacity(ts.len() * 2);
        for w in ts.windows(2) {
            all.push(w[0].clone());
            let h0 = self.at(&w[0]) - other.at(&w[0]);
            let h1 = self.at(&w[1]) - other.at(&w[1]);
            if (h0.is_positive() && h1.is_negative()) || (h0.is_negative() && h1.is_positive()) {
                let cross = &w[0] + (&w[1] - &w[0]) * &h0 / (&h0 - &h1);
                all.push(cross);
            }
        }
        all.push(ts.last().expect("nonempty").clone());
        let pts = all
            .into_iter()
            .map(|t| {
                let v = op(&self.at(&t), &other.at(&t));
                (t, v)
            })
            .collect();
        Pl { pts }.simplified()
    }

    /// Drop breakpoints where the slope does not change.
    fn simplified(mut self) -> Pl {
        if self.pts.len() <= 2 {
            return self;
        }
        let mut out: Vec<(Rat, Rat)> = vec![self.pts[0].clone()];
        for i in 1..self.pts.len() - 1 {
            let (t0, v0) = out.last().expect("nonempty");
            let (t1, v1) = &self.pts[i];
            let (t2, v2) = &self.pts[i + 1];
            if (v1 - v0) * (t2 - t1) != (v2 - v1) * (t1 - t0) {
                out.push(self.pts[i].clone());
            }
        }
        out.push(self.pts.pop().expect("nonempty"));
        Pl { pts: out }
    }

    pub fn max_value(&self) -> (Rat, Rat) {
        self.pts.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).cloned().expect("nonempty")
    }

    pub fn min_value(&self) -> (Rat, Rat) {
        self.pts.iter().min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0))).cloned().expect("nonempty")
    }
}

pub(crate) fn rmax(a: &Rat, b: &Rat) -> Rat {
    if a > b {
        a.clone()
    } else {
        b.clone()
    }
}

pub(crate) fn rmin(a: &Rat, b: &Rat) -> Rat {
    if a < b {
        a.clone()
    } else {
        b.clone()
    }
}
