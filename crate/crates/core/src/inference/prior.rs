use super::param::ParamBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum PriorShape {
    Uniform,
    /// Independent normal coordinates.
    Gaussian { mean: Vec<f64>, sd: Vec<f64> },
    /// Independent Cauchy coordinates.
    Cauchy { location: Vec<f64>, scale: Vec<f64> },
}

/// Prior density `c(alpha)` on a compact support, evaluated in log space up to
/// an additive constant.
#[derive(Debug, Clone)]
pub struct Prior {
    support: ParamBox,
    shape: PriorShape,
}

impl Prior {
    pub fn uniform(support: ParamBox) -> Self {
        Self {
            support,
            shape: PriorShape::Uniform,
        }
    }

    pub fn gaussian(support: ParamBox, mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        check_shape(&support, &mean, &sd)?;
        Ok(Self {
            support,
            shape: PriorShape::Gaussian { mean, sd },
        })
    }

    pub fn cauchy(support: ParamBox, location: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        check_shape(&support, &location, &scale)?;
        Ok(Self {
            support,
            shape: PriorShape::Cauchy { location, scale },
        })
    }

    pub fn support(&self) -> &ParamBox {
        &self.support
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.shape, PriorShape::Uniform)
    }

    /// `log c(alpha)`; `-inf` outside the support.
    pub fn log_density(&self, at: &[f64]) -> f64 {
        if !self.support.contains(at) {
            return f64::NEG_INFINITY;
        }
        match &self.shape {
            PriorShape::Uniform => 0.0,
            PriorShape::Gaussian { mean, sd } => at
                .iter()
                .zip(mean.iter().zip(sd))
                .map(|(x, (m, s))| -0.5 * ((x - m) / s).powi(2))
                .sum(),
            PriorShape::Cauchy { location, scale } => at
                .iter()
                .zip(location.iter().zip(scale))
                .map(|(x, (m, s))| -(1.0 + ((x - m) / s).powi(2)).ln())
                .sum(),
        }
    }
}

fn check_shape(support: &ParamBox, center: &[f64], spread: &[f64]) -> Result<()> {
    if center.len() != support.dim() || spread.len() != support.dim() {
        return Err(Error::invalid("prior hyperparameters do not match the support dimension"));
    }
    if spread.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("prior scale parameters must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_density_outside_support_is_neg_inf() {
        let b = ParamBox::new(vec![0.0], vec![4.0]).unwrap();
        let p = Prior::uniform(b.clone());
        assert_eq!(p.log_density(&[1.0]), 0.0);
        assert_eq!(p.log_density(&[5.0]), f64::NEG_INFINITY);
        let g = Prior::gaussian(b, vec![0.0], vec![2.0]).unwrap();
        assert!((g.log_density(&[2.0]) + 0.5).abs() < 1e-15);
    }
}
