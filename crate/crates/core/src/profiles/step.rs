use crate::{Error, Real, Result};
use serde::{Deserialize, Serialize};

/// Whether a profile is computed exactly or bounds the true profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Exact,
    LowerEnvelope,
    UpperEnvelope,
}

impl ProfileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::LowerEnvelope => "lower_envelope",
            Self::UpperEnvelope => "upper_envelope",
        }
    }
}

/// Where the values of a profile came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    Enumeration,
    Cheeger,
    Volume,
    Poincare,
    Logsob,
    Nash,
    TestFunction,
    SpectralGap,
    Sweep,
    EdgeFlow,
    Combined,
}

impl ProfileSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Enumeration => "enumeration",
            Self::Cheeger => "cheeger",
            Self::Volume => "volume",
            Self::Poincare => "poincare",
            Self::Logsob => "logsob",
            Self::Nash => "nash",
            Self::TestFunction => "test_function",
            Self::SpectralGap => "spectral_gap",
            Self::Sweep => "sweep",
            Self::EdgeFlow => "edge_flow",
            Self::Combined => "combined",
        }
    }
}

/// Right-continuous step function `r -> value` on `[breakpoints[0], end)`.
///
/// On `[breakpoints[i], breakpoints[i + 1])` the value is `values[i]`; the
/// last piece runs to `end`, or to infinity when `end` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProfile<T: Real> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    end: Option<T>,
    kind: ProfileKind,
    source: ProfileSource,
}

/// One CSV/JSON row of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub r: f64,
    pub value: f64,
    pub kind: ProfileKind,
    pub source: ProfileSource,
}

impl<T: Real> StepProfile<T> {
    pub fn new(
        breakpoints: Vec<T>,
        values: Vec<T>,
        end: Option<T>,
        kind: ProfileKind,
        source: ProfileSource,
    ) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "breakpoints must increase strictly".into(),
            ));
        }
        if let Some(e) = end {
            if !(e > *breakpoints.last().unwrap()) {
                return Err(Error::InvalidParameter(
                    "profile end must follow the last breakpoint".into(),
                ));
            }
        }
        if values.iter().any(|&v| v.partial_cmp(&v).is_none()) {
            return Err(Error::InvalidParameter("profile value is NaN".into()));
        }
        Ok(Self {
            breakpoints,
            values,
            end,
            kind,
            source,
        })
    }

    pub fn constant(
        start: T,
        value: T,
        end: Option<T>,
        kind: ProfileKind,
        source: ProfileSource,
    ) -> Result<Self> {
        Self::new(vec![start], vec![value], end, kind, source)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn start(&self) -> T {
        self.breakpoints[0]
    }

    pub fn end(&self) -> Option<T> {
        self.end
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn source(&self) -> ProfileSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_provenance(mut self, kind: ProfileKind, source: ProfileSource) -> Self {
        self.kind = kind;
        self.source = source;
        self
    }

    pub fn covers(&self, r: T) -> bool {
        r >= self.start() && self.end.is_none_or(|e| r < e)
    }

    /// Value at `r`, or `None` outside the domain.
    pub fn value_at(&self, r: T) -> Option<T> {
        if !self.covers(r) {
            return None;
        }
        let idx = self.breakpoints.partition_point(|&b| b <= r);
        Some(self.values[idx - 1])
    }

    /// `(start, end, value)` for every piece.
    pub fn pieces(&self) -> impl Iterator<Item = (T, Option<T>, T)> + '_ {
        (0..self.len()).map(move |i| {
            let end = if i + 1 < self.len() {
                Some(self.breakpoints[i + 1])
            } else {
                self.end
            };
            (self.breakpoints[i], end, self.values[i])
        })
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn min_value(&self) -> T {
        self.values
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| a.min(b))
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            end: self.end,
            kind: self.kind,
            source: self.source,
        }
    }

    /// Merges adjacent pieces with equal values.
    pub fn simplified(&self) -> Self {
        let mut bps = vec![self.breakpoints[0]];
        let mut vals = vec![self.values[0]];
        for i in 1..self.len() {
            if self.values[i] != *vals.last().unwrap() {
                bps.push(self.breakpoints[i]);
                vals.push(self.values[i]);
            }
        }
        Self {
            breakpoints: bps,
            values: vals,
            end: self.end,
            kind: self.kind,
            source: self.source,
        }
    }

    /// Restriction to `[start, end)`.
    pub fn truncated(&self, end: T) -> Result<Self> {
        if !(end > self.start()) {
            return Err(Error::InvalidParameter(
                "truncation before the profile start".into(),
            ));
        }
        let keep = self.breakpoints.partition_point(|&b| b < end);
        let new_end = match self.end {
            Some(e) if e < end => e,
            _ => end,
        };
        Self::new(
            self.breakpoints[..keep].to_vec(),
            self.values[..keep].to_vec(),
            Some(new_end),
            self.kind,
            self.source,
        )
    }

    fn combine(
        profiles: &[&Self],
        kind: ProfileKind,
        source: ProfileSource,
        pick: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidParameter("no profiles to combine".into()));
        }
        let start = profiles
            .iter()
            .map(|p| p.start())
            .fold(T::infinity(), |a, b| a.min(b));
        let end = if profiles.iter().any(|p| p.end.is_none()) {
            None
        } else {
            Some(
                profiles
                    .iter()
                    .map(|p| p.end.unwrap())
                    .fold(-T::infinity(), |a, b| a.max(b)),
            )
        };
        let mut cuts: Vec<T> = profiles
            .iter()
            .flat_map(|p| p.breakpoints.iter().copied().chain(p.end))
            .filter(|&c| end.is_none_or(|e| c < e))
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut bps = Vec::with_capacity(cuts.len());
        let mut vals = Vec::with_capacity(cuts.len());
        for &c in &cuts {
            let v = profiles
                .iter()
                .filter_map(|p| p.value_at(c))
                .reduce(&pick)
                .ok_or_else(|| Error::InvalidParameter("combined profiles leave a gap".into()))?;
            bps.push(c);
            vals.push(v);
        }
        debug_assert_eq!(bps[0], start);
        Ok(Self::new(bps, vals, end, kind, source)?.simplified())
    }

    /// Pointwise maximum over the union of domains; the union must be an interval.
    pub fn pointwise_max(
        profiles: &[&Self],
        kind: ProfileKind,
        source: ProfileSource,
    ) -> Result<Self> {
        Self::combine(profiles, kind, source, |a, b| a.max(b))
    }

    /// Pointwise minimum over the union of domains; the union must be an interval.
    pub fn pointwise_min(
        profiles: &[&Self],
        kind: ProfileKind,
        source: ProfileSource,
    ) -> Result<Self> {
        Self::combine(profiles, kind, source, |a, b| a.min(b))
    }

    pub fn to_records(&self) -> Vec<ProfileRecord> {
        self.breakpoints
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| ProfileRecord {
                r: r.to_f64_lossy(),
                value: v.to_f64_lossy(),
                kind: self.kind,
                source: self.source,
            })
            .collect()
    }
}

/// Points `a = p_0 < p_1 < ... < p_k = b` with `p_{i+1} / p_i <= ratio`.
pub fn geometric_points<T: Real>(a: T, b: T, ratio: T) -> Vec<T> {
    let mut pts = vec![a];
    if !(b > a) {
        return pts;
    }
    let steps = ((b / a).ln() / ratio.ln()).ceil().max(T::one());
    let k = steps.to_f64_lossy() as usize;
    let q = (b / a).powf(T::one() / steps);
    let mut x = a;
    for _ in 1..k {
        x *= q;
        pts.push(x);
    }
    pts.push(b);
    pts
}

/// Step lower envelope of a non-increasing function `f` on `[a, b)`: each
/// geometric piece takes the value of `f` at its right end.
pub fn lower_steps<T: Real>(a: T, b: T, ratio: T, f: impl Fn(T) -> T) -> (Vec<T>, Vec<T>) {
    let pts = geometric_points(a, b, ratio);
    let bps = pts[..pts.len() - 1].to_vec();
    let vals = pts[1..].iter().map(|&x| f(x)).collect();
    (bps, vals)
}
