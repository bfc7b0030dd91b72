use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::GridSignal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Bars whose width (and the gap after each) grows linearly.
    Grating,
    /// Alternating binary angular sectors about the centre.
    Pinwheel,
    Checker,
    /// Triplets of bars at halving sizes, alternating orientation.
    UsafLike,
    /// I.i.d. uniform values.
    Random,
    FromFile,
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "grating" => Ok(TargetKind::Grating),
            "pinwheel" => Ok(TargetKind::Pinwheel),
            "checker" => Ok(TargetKind::Checker),
            "usaf_like" | "usaf" => Ok(TargetKind::UsafLike),
            "random" => Ok(TargetKind::Random),
            "from_file" | "file" => Ok(TargetKind::FromFile),
            _ => Err(Error::InvalidArgument(format!("unknown target kind {s:?}"))),
        }
    }
}

/// Everything needed to regenerate a target bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub shape: Vec<usize>,
    /// Width increment per bar (grating).
    pub growth: usize,
    /// Number of sectors (pinwheel); must be even.
    pub sectors: usize,
    /// Cell size (checker).
    pub period: usize,
    pub seed: u64,
    /// Values of the dark and bright phases, both in `[0, 1]`.
    pub low: f64,
    pub high: f64,
    pub path: Option<PathBuf>,
}

impl TargetSpec {
    pub fn new(kind: TargetKind, shape: &[usize]) -> Self {
        TargetSpec {
            kind,
            shape: shape.to_vec(),
            growth: 1,
            sectors: 16,
            period: 1,
            seed: 0,
            low: 0.0,
            high: 1.0,
            path: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind != TargetKind::FromFile {
            GridSignal::zeros(&self.shape)?;
        }
        for v in [self.low, self.high] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("contrast level {v} outside [0, 1]")));
            }
        }
        match self.kind {
            TargetKind::Grating if self.growth == 0 => Err(Error::InvalidArgument("growth must be positive".into())),
            TargetKind::Checker if self.period == 0 => Err(Error::InvalidArgument("period must be positive".into())),
            TargetKind::Pinwheel if self.shape.len() != 2 => {
                Err(Error::InvalidArgument("a pinwheel is two-dimensional".into()))
            }
            TargetKind::Pinwheel if self.sectors < 2 || self.sectors % 2 == 1 => {
                Err(Error::InvalidArgument("pinwheel sector count must be even and at least 2".into()))
            }
            TargetKind::FromFile if self.path.is_none() => Err(Error::InvalidArgument("no file given".into())),
            _ => Ok(()),
        }
    }
}

/// Deterministically renders `spec`. Values lie in `[0, 1]`.
pub fn make_target(spec: &TargetSpec) -> Result<GridSignal> {
    spec.validate()?;
    let (lo, hi) = (spec.low, spec.high);
    let level = |on: bool| if on { hi } else { lo };
    match spec.kind {
        TargetKind::Grating => {
            let n = spec.shape[0];
            let profile = grating_profile(n, spec.growth);
            along_first_axis(&spec.shape, |i| level(profile[i]))
        }
        TargetKind::Checker => {
            let p = spec.period;
            match spec.shape[..] {
                [n] => GridSignal::from_1d((0..n).map(|i| level((i / p) % 2 == 1)).collect()),
                [r, c] => GridSignal::from_fn_2d(r, c, |i, j| level((i / p + j / p) % 2 == 1)),
                _ => unreachable!(),
            }
        }
        TargetKind::Pinwheel => {
            let (r, c) = (spec.shape[0], spec.shape[1]);
            let (cy, cx) = (r as f64 / 2.0, c as f64 / 2.0);
            let width = 2.0 * PI / spec.sectors as f64;
            GridSignal::from_fn_2d(r, c, |i, j| {
                let theta = (i as f64 + 0.5 - cy).atan2(j as f64 + 0.5 - cx) + PI;
                let sector = ((theta / width) as usize).min(spec.sectors - 1);
                level(sector % 2 == 1)
            })
        }
        TargetKind::UsafLike => usaf_like(&spec.shape, lo, hi),
        TargetKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let len = spec.shape.iter().product();
            let values = (0..len).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
            GridSignal::new(spec.shape.clone(), values)
        }
        TargetKind::FromFile => {
            let path = spec.path.as_ref().expect("validated");
            let s = crate::io::read_signal(path)?;
            Ok(normalise_unit_range(&s))
        }
    }
}

/// `true` on bars: bar `i` and the gap after it are both `1 + growth·i` wide.
fn grating_profile(n: usize, growth: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(n);
    let mut width = 1;
    while out.len() < n {
        for on in [true, false] {
            for _ in 0..width {
                if out.len() < n {
                    out.push(on);
                }
            }
        }
        width += growth;
    }
    out
}

fn along_first_axis(shape: &[usize], f: impl Fn(usize) -> f64) -> Result<GridSignal> {
    match shape {
        [n] => GridSignal::from_1d((0..*n).map(f).collect()),
        [r, c] => GridSignal::from_fn_2d(*r, *c, |i, _| f(i)),
        _ => unreachable!(),
    }
}

fn usaf_like(shape: &[usize], lo: f64, hi: f64) -> Result<GridSignal> {
    // Elements of three bars of width s separated by s, for s = n/16, n/32,
    // ... down to 1, laid out left to right; in 2-D each element is a 5s × 5s
    // block centred vertically, alternating vertical and horizontal bars.
    let n = *shape.last().expect("validated");
    let mut elements = Vec::new();
    let mut s = (n / 16).max(1);
    let mut x = s;
    let mut vertical = true;
    while x + 5 * s <= n {
        elements.push((x, s, vertical));
        x += 6 * s.max(1) + 1;
        vertical = !vertical;
        s = (s / 2).max(1);
    }
    let on_bar = |offset: usize, s: usize| offset < 5 * s && (offset / s) % 2 == 0;
    match shape {
        [_] => {
            let mut v = vec![lo; n];
            for &(x, s, _) in &elements {
                for (t, slot) in v.iter_mut().enumerate().skip(x).take(5 * s) {
                    if on_bar(t - x, s) {
                        *slot = hi;
                    }
                }
            }
            GridSignal::from_1d(v)
        }
        [r, c] => {
            let r = *r;
            GridSignal::from_fn_2d(r, *c, |i, j| {
                for &(x, s, vertical) in &elements {
                    let y0 = (r / 2).saturating_sub(5 * s / 2);
                    if j < x || j >= x + 5 * s || i < y0 || i >= y0 + 5 * s {
                        continue;
                    }
                    let offset = if vertical { j - x } else { i - y0 };
                    return if on_bar(offset, s) { hi } else { lo };
                }
                lo
            })
        }
        _ => unreachable!(),
    }
}

fn normalise_unit_range(s: &GridSignal) -> GridSignal {
    let (lo, hi) = s
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo >= 0.0 && hi <= 1.0 {
        return s.clone();
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    s.map(|v| (v - lo) / span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: TargetKind, shape: &[usize]) -> TargetSpec {
        TargetSpec::new(kind, shape)
    }

    #[test]
    fn grating_bar_widths_grow() {
        let mut s = spec(TargetKind::Grating, &[20]);
        s.growth = 2;
        let v = make_target(&s).unwrap();
        let want = [1., 0., 1., 1., 1., 0., 0., 0., 1., 1., 1., 1., 1., 0., 0., 0., 0., 0., 1., 1.];
        assert_eq!(v.values(), &want);
    }

    #[test]
    fn checker_parity() {
        let mut s = spec(TargetKind::Checker, &[4, 4]);
        s.period = 2;
        let v = make_target(&s).unwrap();
        assert_eq!(v.at(&[0, 0]), 0.0);
        assert_eq!(v.at(&[0, 2]), 1.0);
        assert_eq!(v.at(&[2, 2]), 0.0);
        assert_eq!(v.values().iter().sum::<f64>(), 8.0);
    }

    #[test]
    fn pinwheel_is_balanced() {
        let v = make_target(&spec(TargetKind::Pinwheel, &[64, 64])).unwrap();
        // Mirror symmetry pairs on/off pixels except the 64 diagonal ones,
        // which sit exactly on sector boundaries.
        let on = v.values().iter().sum::<f64>();
        assert!((on - 2048.0).abs() <= 64.0, "{on}");
        assert!(make_target(&spec(TargetKind::Pinwheel, &[64])).is_err());
    }

    #[test]
    fn usaf_has_both_orientations() {
        let v = make_target(&spec(TargetKind::UsafLike, &[64, 64])).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0 || x == 1.0));
        // First element (s = 4, vertical): columns 4..24, constant down a bar.
        assert_eq!(v.at(&[30, 4]), 1.0);
        assert_eq!(v.at(&[30, 8]), 0.0);
        let one_d = make_target(&spec(TargetKind::UsafLike, &[64])).unwrap();
        assert_eq!(one_d.values()[4..8], [1.0; 4]);
    }

    #[test]
    fn random_is_seeded_and_bounded() {
        let mut s = spec(TargetKind::Random, &[8, 8]);
        s.seed = 3;
        let a = make_target(&s).unwrap();
        assert_eq!(a, make_target(&s).unwrap());
        s.seed = 4;
        assert_ne!(a, make_target(&s).unwrap());
        assert!(a.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut s = spec(TargetKind::Checker, &[8]);
        s.period = 0;
        assert!(make_target(&s).is_err());
        let mut s = spec(TargetKind::Random, &[8]);
        s.high = 2.0;
        assert!(make_target(&s).is_err());
        assert!(make_target(&spec(TargetKind::FromFile, &[8])).is_err());
        assert_eq!("usaf-like".parse::<TargetKind>().unwrap(), TargetKind::UsafLike);
    }
}
