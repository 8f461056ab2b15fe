use serde::Serialize;

/// Per-point status attached to a series value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PointFlags {
    /// An intermediate map was built with a pseudo-inverse.
    pub pseudo_inverted: bool,
    /// The walk parameters lie beyond the PT-breaking threshold.
    pub beyond_ep: bool,
}

/// Time-indexed scalar diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSeries {
    pub label: String,
    pub times: Vec<u32>,
    pub values: Vec<f64>,
    pub flags: Vec<PointFlags>,
}

impl MeasureSeries {
    pub fn new(label: impl Into<String>) -> Self {
        MeasureSeries {
            label: label.into(),
            times: Vec::new(),
            values: Vec::new(),
            flags: Vec::new(),
        }
    }

    /// Appends a point. Times must increase strictly.
    pub fn push(&mut self, t: u32, value: f64, flags: PointFlags) {
        if let Some(&last) = self.times.last() {
            assert!(t > last, "series times must increase ({last} then {t})");
        }
        self.times.push(t);
        self.values.push(value);
        self.flags.push(flags);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Value at time `t`, if recorded.
    pub fn at(&self, t: u32) -> Option<f64> {
        self.times.iter().position(|&s| s == t).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64, PointFlags)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .zip(&self.flags)
            .map(|((&t, &v), &f)| (t, v, f))
    }
}
