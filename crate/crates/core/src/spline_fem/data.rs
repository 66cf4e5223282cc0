use num_complex::Complex64;

/// Volume source `f` and Robin datum `g`.
///
/// `f` may read the local index value `n` (the manufactured data does); such
/// data must report `field_dependent() == true`.
pub trait SourceData: Send + Sync {
    fn f(&self, x: [f64; 2], n: f64) -> Complex64;
    fn g(&self, x: [f64; 2], normal: [f64; 2]) -> Complex64;
    fn field_dependent(&self) -> bool {
        false
    }
}

/// `f = 1`, `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultData;

impl SourceData for DefaultData {
    fn f(&self, _x: [f64; 2], _n: f64) -> Complex64 {
        Complex64::from(1.0)
    }
    fn g(&self, _x: [f64; 2], _normal: [f64; 2]) -> Complex64 {
        Complex64::default()
    }
}

/// Zero data.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl SourceData for ZeroData {
    fn f(&self, _x: [f64; 2], _n: f64) -> Complex64 {
        Complex64::default()
    }
    fn g(&self, _x: [f64; 2], _normal: [f64; 2]) -> Complex64 {
        Complex64::default()
    }
}

/// Plane wave `u = exp(i k d.x)`, `d = (cos phi, sin phi)`, with the data that
/// makes it the exact solution for a given index field.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave {
    pub k: f64,
    pub dir: [f64; 2],
}

impl PlaneWave {
    pub fn new(k: f64, angle: f64) -> Self {
        Self {
            k,
            dir: [angle.cos(), angle.sin()],
        }
    }

    pub fn u(&self, x: [f64; 2]) -> Complex64 {
        Complex64::new(0.0, self.k * (self.dir[0] * x[0] + self.dir[1] * x[1])).exp()
    }

    /// `(u, grad u, lap u)`.
    pub fn u_ders(&self, x: [f64; 2]) -> (Complex64, [Complex64; 2], Complex64) {
        let u = self.u(x);
        let ik = Complex64::new(0.0, self.k);
        (u, [ik * self.dir[0] * u, ik * self.dir[1] * u], -self.k * self.k * u)
    }

    /// Exact mean of `u` over the square `(-a/2, a/2)^2`.
    pub fn exact_mean_integral(&self, side: f64) -> Complex64 {
        let one = |c: f64| {
            let t = self.k * c * side / 2.0;
            if t.abs() < 1e-12 {
                side
            } else {
                2.0 * t.sin() / (self.k * c)
            }
        };
        Complex64::from(one(self.dir[0]) * one(self.dir[1]))
    }
}

impl SourceData for PlaneWave {
    fn f(&self, x: [f64; 2], n: f64) -> Complex64 {
        self.k * self.k * (1.0 - n) * self.u(x)
    }
    fn g(&self, x: [f64; 2], normal: [f64; 2]) -> Complex64 {
        let dn = self.dir[0] * normal[0] + self.dir[1] * normal[1];
        Complex64::new(0.0, self.k * dn - self.k) * self.u(x)
    }
    fn field_dependent(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_index_gives_zero_source() {
        let pw = PlaneWave::new(5.0, 0.3);
        assert_eq!(pw.f([0.1, 0.2], 1.0), Complex64::default());
    }

    #[test]
    fn right_edge_datum_vanishes_for_phi_zero() {
        let pw = PlaneWave::new(5.0, 0.0);
        assert!(pw.g([0.5, 0.1], [1.0, 0.0]).norm() < 1e-15);
    }

    #[test]
    fn strong_residual_vanishes() {
        // -lap u - k^2 n u = f and du/dn - i k u = g
        for (k, phi, n) in [(3.0, 0.2, 1.3), (10.0, 2.0, 0.7), (1.0, -1.0, 1.0)] {
            let pw = PlaneWave::new(k, phi);
            for x in [[0.1, -0.3], [0.45, 0.2], [-0.5, 0.0]] {
                let (u, g, l) = pw.u_ders(x);
                let r = -l - k * k * n * u - pw.f(x, n);
                assert!(r.norm() < 1e-12 * k * k);
                let nrm = [0.0, -1.0];
                let rb = g[0] * nrm[0] + g[1] * nrm[1] - Complex64::new(0.0, k) * u - pw.g(x, nrm);
                assert!(rb.norm() < 1e-12 * k);
            }
        }
    }
}
