/// Interpolation kernel used at departure points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Cubic Hermite with node slopes from the 4th-order centred difference (6-point support).
    #[default]
    Hermite4,
    /// Catmull–Rom cubic (4-point support).
    CatmullRom,
    /// Linear in each direction; diagnostics only.
    Bilinear,
}

impl Interpolation {
    /// First node of the support relative to `floor(x)`, and the support length.
    pub fn support(self) -> (isize, usize) {
        match self {
            Interpolation::Hermite4 => (-2, 6),
            Interpolation::CatmullRom => (-1, 4),
            Interpolation::Bilinear => (0, 2),
        }
    }

    /// 1-D weights for fractional offset `a ∈ [0, 1)` from the base node.
    pub fn weights(self, a: f64) -> [f64; 6] {
        let a2 = a * a;
        let a3 = a2 * a;
        match self {
            Interpolation::Hermite4 => {
                let h00 = 2.0 * a3 - 3.0 * a2 + 1.0;
                let h10 = a3 - 2.0 * a2 + a;
                let h01 = -2.0 * a3 + 3.0 * a2;
                let h11 = a3 - a2;
                let t = 1.0 / 12.0;
                [
                    h10 * t,
                    -8.0 * h10 * t + h11 * t,
                    h00 - 8.0 * h11 * t,
                    h01 + 8.0 * h10 * t,
                    -h10 * t + 8.0 * h11 * t,
                    -h11 * t,
                ]
            }
            Interpolation::CatmullRom => [
                0.5 * (-a3 + 2.0 * a2 - a),
                0.5 * (3.0 * a3 - 5.0 * a2 + 2.0),
                0.5 * (-3.0 * a3 + 4.0 * a2 + a),
                0.5 * (a3 - a2),
                0.0,
                0.0,
            ],
            Interpolation::Bilinear => [1.0 - a, a, 0.0, 0.0, 0.0, 0.0],
        }
    }
}
