//! Arbitrary-precision reference values (256-bit binary floats).

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

type F = FBig<HalfEven, 2>;

const PREC: usize = 256;

fn big(x: f64) -> F {
    F::try_from(x)
        .expect("finite input")
        .with_precision(PREC)
        .value()
}

fn int(x: i64) -> F {
    F::from(x).with_precision(PREC).value()
}

fn out(x: &F) -> f64 {
    x.to_f64().value()
}

fn pow(base: &F, exp: &F) -> F {
    (base.ln() * exp).exp()
}

/// `(p/q)^(m/n)` with all four integers exact.
pub fn rational_power(p: i64, q: i64, m: i64, n: i64) -> f64 {
    out(&pow(&(int(p) / int(q)), &(int(m) / int(n))))
}

/// `(E/A)^(1/r)`.
pub fn cell_density(e: f64, r: f64, a: f64) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    out(&pow(&(big(e) / big(a)), &(int(1) / big(r))))
}

/// `((E/A)^(1/r))^(r - 1/2)`, evaluated without intermediate rounding.
pub fn demand(e: f64, r: f64, a: f64) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    let r = big(r);
    let exponent = (r.clone() - int(1) / int(2)) / r;
    out(&pow(&(big(e) / big(a)), &exponent))
}

/// `activity * freq * v^2 * cap`, inputs in SI units.
pub fn dynamic_power(activity: f64, freq: f64, v: f64, cap: f64) -> f64 {
    let v = big(v);
    out(&(big(activity) * big(freq) * v.clone() * v * big(cap)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // (2/3)^(4/3) = 0.58238697649086591269...
        assert!((rational_power(2, 3, 4, 3) - 0.582_386_976_490_865_9).abs() < 1e-16);
        assert_eq!(rational_power(16, 1, 1, 4), 2.0);
        assert_eq!(demand(3.0, 0.75, 3.0), 1.0);
        assert!((dynamic_power(0.2, 1e9, 0.8, 20e-15) - 2.56e-6).abs() < 1e-20);
    }
}
