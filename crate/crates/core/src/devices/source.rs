use super::{require, DeviceError};
use crate::scalar::{cast, Scalar};

/// Independent voltage source waveform.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceWaveform<T = f64> {
    Dc(T),
    Pulse {
        v1: T,
        v2: T,
        delay: T,
        rise: T,
        fall: T,
        width: T,
        period: T,
    },
    /// Piecewise linear `(t, V)` points, strictly increasing in time.
    Pwl(Vec<(T, T)>),
}

impl<T: Scalar> SourceWaveform<T> {
    pub fn validate(&self) -> Result<(), DeviceError> {
        match self {
            SourceWaveform::Dc(v) => require(v.is_finite(), || "dc value not finite".into()),
            SourceWaveform::Pulse {
                rise,
                fall,
                width,
                period,
                delay,
                ..
            } => {
                require(*rise >= T::zero() && *fall >= T::zero(), || {
                    "pulse rise/fall must be >= 0".into()
                })?;
                require(*width >= T::zero(), || "pulse width must be >= 0".into())?;
                require(*delay >= T::zero(), || "pulse delay must be >= 0".into())?;
                require(*period > T::zero(), || "pulse period must be > 0".into())
            }
            SourceWaveform::Pwl(points) => {
                require(!points.is_empty(), || "pwl needs at least one point".into())?;
                require(points.windows(2).all(|w| w[1].0 > w[0].0), || {
                    "pwl times must be strictly increasing".into()
                })
            }
        }
    }

    /// Value at time `t`; DC analyses evaluate at `t = 0`.
    pub fn value_at(&self, t: T) -> T {
        match self {
            SourceWaveform::Dc(v) => *v,
            SourceWaveform::Pulse {
                v1,
                v2,
                delay,
                rise,
                fall,
                width,
                period,
            } => {
                if t <= *delay {
                    return *v1;
                }
                let local = (t - *delay) % *period;
                if local < *rise {
                    *v1 + (*v2 - *v1) * local / *rise
                } else if local < *rise + *width {
                    *v2
                } else if local < *rise + *width + *fall {
                    *v2 + (*v1 - *v2) * (local - *rise - *width) / *fall
                } else {
                    *v1
                }
            }
            SourceWaveform::Pwl(points) => {
                let first = points[0];
                if t <= first.0 {
                    return first.1;
                }
                for seg in points.windows(2) {
                    let (a, b) = (seg[0], seg[1]);
                    if t <= b.0 {
                        return a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    pub fn dc_value(&self) -> T {
        self.value_at(T::zero())
    }

    pub fn cast<U: Scalar>(&self) -> SourceWaveform<U> {
        match self {
            SourceWaveform::Dc(v) => SourceWaveform::Dc(cast(*v)),
            SourceWaveform::Pulse {
                v1,
                v2,
                delay,
                rise,
                fall,
                width,
                period,
            } => SourceWaveform::Pulse {
                v1: cast(*v1),
                v2: cast(*v2),
                delay: cast(*delay),
                rise: cast(*rise),
                fall: cast(*fall),
                width: cast(*width),
                period: cast(*period),
            },
            SourceWaveform::Pwl(points) => {
                SourceWaveform::Pwl(points.iter().map(|&(t, v)| (cast(t), cast(v))).collect())
            }
        }
    }
}
