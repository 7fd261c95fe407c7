//! Ordinal ranks and the evaluation matrices they are read from.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// A severity, occurrence or detectability rank.
///
/// The value is only meaningful relative to a [`ScaleBounds`]; use
/// [`ScaleBounds::check`] before trusting one that came from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank(u8);

impl Rank {
    pub const fn new(value: u8) -> Self {
        Rank(value)
    }

    pub const fn value(self) -> u8 {
        self.0
    }
}

impl From<u8> for Rank {
    fn from(value: u8) -> Self {
        Rank(value)
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Severity,
    Occurrence,
    Detectability,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Severity, Dimension::Occurrence, Dimension::Detectability];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Severity => "severity",
            Dimension::Occurrence => "occurrence",
            Dimension::Detectability => "detectability",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScaleError {
    #[error("{dimension} rank {value} is outside the scale [{min}, {max}]")]
    OutOfScale {
        dimension: Dimension,
        value: u8,
        min: u8,
        max: u8,
    },
    #[error("scale bounds [{min}, {max}] are invalid (need 1 <= min <= max)")]
    InvalidBounds { min: u8, max: u8 },
}

/// Inclusive rank range shared by all three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScaleBounds {
    pub min: u8,
    pub max: u8,
}

impl Default for ScaleBounds {
    fn default() -> Self {
        ScaleBounds { min: 1, max: 4 }
    }
}

impl ScaleBounds {
    pub fn new(min: u8, max: u8) -> Result<Self, ScaleError> {
        if min < 1 || max < min {
            return Err(ScaleError::InvalidBounds { min, max });
        }
        Ok(ScaleBounds { min, max })
    }

    pub fn contains(self, rank: Rank) -> bool {
        (self.min..=self.max).contains(&rank.0)
    }

    pub fn check(self, dimension: Dimension, rank: Rank) -> Result<Rank, ScaleError> {
        if self.contains(rank) {
            Ok(rank)
        } else {
            Err(ScaleError::OutOfScale {
                dimension,
                value: rank.0,
                min: self.min,
                max: self.max,
            })
        }
    }

    /// Smallest and largest criticality reachable on this scale.
    pub fn criticality_range(self) -> (u32, u32) {
        let lo = u32::from(self.min);
        let hi = u32::from(self.max);
        (lo * lo * lo, hi * hi * hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingLevel {
    pub rank: u8,
    pub label: String,
    pub description: String,
}

impl RatingLevel {
    fn new(rank: u8, label: &str, description: &str) -> Self {
        RatingLevel {
            rank,
            label: label.to_string(),
            description: description.to_string(),
        }
    }
}

/// Named levels of one evaluation matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingScale {
    pub dimension: Dimension,
    pub levels: Vec<RatingLevel>,
}

impl RatingScale {
    pub fn default_for(dimension: Dimension) -> Self {
        let levels = match dimension {
            Dimension::Severity => alloc::vec![
                RatingLevel::new(
                    1,
                    "Negligible",
                    "System degraded; availability and operation unaffected.",
                ),
                RatingLevel::new(2, "Significant", "System degraded; some operations become unavailable.",),
                RatingLevel::new(3, "Critical", "System degraded to the point of being unavailable.",),
                RatingLevel::new(4, "Catastrophic", "Fatal, possibly fatal or permanent harm to users.",),
            ],
            Dimension::Occurrence => alloc::vec![
                RatingLevel::new(1, "Very Low", "Rarer than weekly."),
                RatingLevel::new(2, "Low", "Weekly or more often."),
                RatingLevel::new(3, "Medium", "Many times per week."),
                RatingLevel::new(4, "High", "Every day."),
            ],
            Dimension::Detectability => alloc::vec![
                RatingLevel::new(1, "High", "Always caught before the failure occurs.",),
                RatingLevel::new(2, "Medium", "Usually caught before the failure occurs.",),
                RatingLevel::new(3, "Low", "Rarely caught before the failure occurs.",),
                RatingLevel::new(4, "Very Low", "Never caught before the failure occurs.",),
            ],
        };
        RatingScale { dimension, levels }
    }

    /// Case-insensitive label lookup.
    pub fn resolve_label(&self, label: &str) -> Option<Rank> {
        let wanted = label.trim();
        self.levels
            .iter()
            .find(|level| level.label.eq_ignore_ascii_case(wanted))
            .map(|level| Rank(level.rank))
    }

    pub fn label_of(&self, rank: Rank) -> Option<&str> {
        self.levels
            .iter()
            .find(|level| level.rank == rank.0)
            .map(|level| level.label.as_str())
    }
}

/// The three evaluation matrices plus the common rank range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scales {
    pub bounds: ScaleBounds,
    pub severity: RatingScale,
    pub occurrence: RatingScale,
    pub detectability: RatingScale,
}

impl Default for Scales {
    fn default() -> Self {
        Scales {
            bounds: ScaleBounds::default(),
            severity: RatingScale::default_for(Dimension::Severity),
            occurrence: RatingScale::default_for(Dimension::Occurrence),
            detectability: RatingScale::default_for(Dimension::Detectability),
        }
    }
}

impl Scales {
    pub fn get(&self, dimension: Dimension) -> &RatingScale {
        match dimension {
            Dimension::Severity => &self.severity,
            Dimension::Occurrence => &self.occurrence,
            Dimension::Detectability => &self.detectability,
        }
    }

    pub fn get_mut(&mut self, dimension: Dimension) -> &mut RatingScale {
        match dimension {
            Dimension::Severity => &mut self.severity,
            Dimension::Occurrence => &mut self.occurrence,
            Dimension::Detectability => &mut self.detectability,
        }
    }
}
