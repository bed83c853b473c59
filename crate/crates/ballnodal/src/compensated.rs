//! Double-double evaluations of the point checks, used to confirm signs
//! obtained in plain `f64`.

use twofloat::TwoFloat;

type T = TwoFloat;

fn t(x: f64) -> T {
    T::from(x)
}

pub(crate) fn rho_bar() -> T {
    (t(5.0).sqrt() - 1.0) / 2.0
}

fn parts(rho: T, n: usize) -> (T, T, T, T) {
    let k = n as i32 - 2;
    let r2 = rho * rho;
    let one = t(1.0);
    let two_rho = rho * 2.0;
    let a = (one - r2).powi(-k) - two_rho.powi(-k) + (one + r2).powi(-k);
    let b = rho.powi(-k) - 1.0;
    let kf = k as f64;
    let da = ((rho * 2.0) * (one - r2).powi(-k - 1) + two_rho.powi(-k - 1) * 2.0
        - (rho * 2.0) * (one + r2).powi(-k - 1))
        * kf;
    let db = -(rho.powi(-k - 1) * kf);
    (a, b, da, db)
}

fn cap_lambda(rho: T, n: usize) -> T {
    let (a, b, _, _) = parts(rho, n);
    (a * 2.0) / ((b * b + a * 4.0).sqrt() + b)
}

pub(crate) fn chi(rho: T, n: usize) -> T {
    let (a, b, da, db) = parts(rho, n);
    let cl = (a * 2.0) / ((b * b + a * 4.0).sqrt() + b);
    da + cl * db * 2.0
}

/// `(1+ρ²)^{−N/2}` through a square root so odd `N` stays in double-double.
fn inv_half_power(base: T, n: usize) -> T {
    base.sqrt().powi(-(n as i32))
}

pub(crate) fn little_m(rho: T, n: usize) -> T {
    let r2 = rho * rho;
    -cap_lambda(rho, n) + (t(1.0) - r2) * inv_half_power(t(1.0) + r2, n) * 2.0
}

pub(crate) fn big_m(rho: T, n: usize) -> T {
    let ni = n as i32;
    let one = t(1.0);
    -cap_lambda(rho, n) + (one - rho * rho) * ((one - rho).powi(-ni) + (one + rho).powi(-ni))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_with_plain_evaluation() {
        for n in [3, 7, 15] {
            for r in [0.5, 0.62, 0.8] {
                let plain = crate::reduced::chi(r, n).unwrap();
                let dd = chi(t(r), n).hi();
                assert!((plain - dd).abs() < 1e-10 * plain.abs().max(1.0));
                let pm = crate::reduced::little_m(r, n).unwrap();
                assert!((pm - little_m(t(r), n).hi()).abs() < 1e-10 * pm.abs().max(1.0));
                let pbm = crate::reduced::big_m(r, n).unwrap();
                assert!((pbm - big_m(t(r), n).hi()).abs() < 1e-10 * pbm.abs().max(1.0));
            }
        }
        assert!((rho_bar().hi() - crate::RHO_BAR).abs() < 1e-16);
    }
}
