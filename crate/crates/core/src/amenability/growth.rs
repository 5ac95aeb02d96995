use crate::error::{Error, Result};
use crate::space::{PointId, Space};

/// Advisory label from the tail slope of `log |B_n|`; never a proof of anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthTag {
    PolynomialLike,
    ExponentialLike,
    Inconclusive,
}

impl GrowthTag {
    pub fn label(self) -> &'static str {
        match self {
            GrowthTag::PolynomialLike => "polynomial-like",
            GrowthTag::ExponentialLike => "exponential-like",
            GrowthTag::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProfile {
    /// `sizes[n] = |B_n(x)|` for `n = 0..=n_max`.
    pub sizes: Vec<u64>,
    pub slope: Option<f64>,
    pub tag: GrowthTag,
}

pub const EXPONENTIAL_SLOPE: f64 = 0.2;

pub fn growth_profile(space: &Space, x: &PointId, n_max: u64) -> Result<GrowthProfile> {
    if n_max == 0 {
        return Err(Error::Invalid("growth profile needs n_max >= 1".into()));
    }
    let ball = space.ball(x, n_max)?;
    let mut sizes = vec![0u64; n_max as usize + 1];
    for y in &ball {
        sizes[space.dist(x, y)? as usize] += 1;
    }
    for n in 1..sizes.len() {
        sizes[n] += sizes[n - 1];
    }
    let slope = tail_slope(&sizes);
    let tag = match slope {
        None => GrowthTag::Inconclusive,
        Some(s) if s > EXPONENTIAL_SLOPE => GrowthTag::ExponentialLike,
        Some(_) => GrowthTag::PolynomialLike,
    };
    Ok(GrowthProfile { sizes, slope, tag })
}

/// Least-squares slope of `ln |B_n|` against `n` over `n >= n_max / 2`; needs four points.
fn tail_slope(sizes: &[u64]) -> Option<f64> {
    let start = (sizes.len() - 1) / 2;
    let pts: Vec<(f64, f64)> = (start..sizes.len()).map(|n| (n as f64, (sizes[n] as f64).ln())).collect();
    if pts.len() < 4 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
