/// Nearest-neighbor pair interaction as a function of the angle difference.
///
/// Both kinds are ferromagnetic: the pair energy is minimal at alignment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Interaction {
    /// `-cos Δ`
    #[default]
    Cosine,
    /// `-((1 + cos Δ)/2)^p` with `p >= 1`
    VeryNonlinear { p: f64 },
}

impl Interaction {
    #[inline]
    pub fn pair_energy(&self, delta: f64) -> f64 {
        match *self {
            Interaction::Cosine => -delta.cos(),
            Interaction::VeryNonlinear { p } => -(0.5 * (1.0 + delta.cos())).powf(p),
        }
    }

    /// Derivative of the pair energy with respect to `Δ`.
    #[inline]
    pub fn pair_force(&self, delta: f64) -> f64 {
        match *self {
            Interaction::Cosine => delta.sin(),
            Interaction::VeryNonlinear { p } => {
                let (s, c) = delta.sin_cos();
                p * (0.5 * (1.0 + c)).powf(p - 1.0) * 0.5 * s
            }
        }
    }

    /// Upper bound on `|V(θ + a) - V(θ)|` over all `θ`.
    pub fn max_increment(&self, a: f64) -> f64 {
        match *self {
            Interaction::Cosine => 2.0 * (0.5 * a).sin().abs(),
            Interaction::VeryNonlinear { p } => {
                // V = -cos^{2p}(θ/2); |V'| peaks where tan²(θ/2) = 1/(2p-1).
                let q = 2.0 * p - 1.0;
                let lip = p * (q / (1.0 + q)).powf(0.5 * q) / (1.0 + q).sqrt();
                (a.abs() * lip).min(1.0)
            }
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        match *self {
            Interaction::Cosine => Ok(()),
            Interaction::VeryNonlinear { p } if p.is_finite() && p >= 1.0 => Ok(()),
            Interaction::VeryNonlinear { p } => Err(crate::error::invalid(
                "interaction.p",
                format!("exponent must be a finite real >= 1, got {p}"),
            )),
        }
    }
}
