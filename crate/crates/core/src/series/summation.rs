use num_complex::Complex64;
use num_traits::Zero;

/// How series terms are accumulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Summation {
    Naive,
    /// Neumaier's compensated summation, applied to real and imaginary parts.
    #[default]
    Compensated,
}

#[derive(Clone, Copy, Debug)]
pub struct Accumulator {
    mode: Summation,
    sum: Complex64,
    comp: Complex64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl Accumulator {
    pub fn new(mode: Summation) -> Self {
        Accumulator { mode, sum: Complex64::zero(), comp: Complex64::zero() }
    }

    pub fn add(&mut self, x: Complex64) {
        match self.mode {
            Summation::Naive => self.sum += x,
            Summation::Compensated => {
                neumaier(&mut self.sum.re, &mut self.comp.re, x.re);
                neumaier(&mut self.sum.im, &mut self.comp.im, x.im);
            }
        }
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}
