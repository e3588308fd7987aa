//! Standard normal restricted to an interval, stable far into the tails.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use statrs::distribution::{ContinuousCDF, Normal};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Beyond this point the upper tail is sampled by rejection, not inversion.
const TAIL_START: f64 = 5.0;

/// `ln P(Z > a)`.
fn ln_upper_tail(a: f64) -> f64 {
    if a < 30.0 {
        Normal::standard().sf(a).ln()
    } else {
        ln_upper_tail_asymptotic(a)
    }
}

fn ln_upper_tail_asymptotic(a: f64) -> f64 {
    let r = 1.0 / (a * a);
    -0.5 * a * a - a.ln() - LN_SQRT_2PI + (1.0 - r + 3.0 * r * r - 15.0 * r * r * r).ln()
}

/// `ln P(a < Z < b)`; `a < b`, either may be infinite.
pub(crate) fn ln_interval_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    if b <= 0.0 {
        return ln_interval_mass(-b, -a);
    }
    if a >= 0.0 {
        let (la, lb) = (ln_upper_tail(a), if b.is_finite() { ln_upper_tail(b) } else { f64::NEG_INFINITY });
        return la + (-(lb - la).exp()).ln_1p();
    }
    let n = Normal::standard();
    (1.0 - n.sf(b) - n.cdf(a)).ln()
}

/// One draw of `Z | a < Z < b`.
pub(crate) fn sample_interval<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b <= 0.0 {
        return -sample_interval(-b, -a, rng);
    }
    let z = if a >= TAIL_START { sample_far_tail(a, b, rng) } else { invert(a, b, rng) };
    z.clamp(a, b)
}

fn invert<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let n = Normal::standard();
    if a >= 0.0 {
        let (qa, qb) = (n.sf(a), n.sf(b));
        let u: f64 = rng.random();
        return -n.inverse_cdf(qb + u * (qa - qb));
    }
    let (pa, pb) = (n.cdf(a), n.cdf(b));
    let u: f64 = rng.random();
    n.inverse_cdf(pa + u * (pb - pa))
}

fn sample_far_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if (b - a) * a < 1.0 {
        // narrow slab: uniform proposal, acceptance >= e^-1.5
        loop {
            let z = rng.random_range(a..=b);
            let u: f64 = rng.random();
            if u.ln() <= -0.5 * (z * z - a * a) {
                return z;
            }
        }
    }
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = a + e / a;
        if z > b {
            continue;
        }
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * (z - a) * (z - a) {
            return z;
        }
    }
}
