//! Category labels along four independent dimensions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const ABSTAIN: &str = "abstain";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Scene,
    Weather,
    TimeOfDay,
    CrowdDensity,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Scene,
        Dimension::Weather,
        Dimension::TimeOfDay,
        Dimension::CrowdDensity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Scene => "scene",
            Dimension::Weather => "weather",
            Dimension::TimeOfDay => "time_of_day",
            Dimension::CrowdDensity => "crowd_density",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CategoryLabels {
    pub scene: String,
    pub weather: String,
    pub time_of_day: String,
    pub crowd_density: String,
}

impl CategoryLabels {
    pub fn get(&self, dim: Dimension) -> &str {
        match dim {
            Dimension::Scene => &self.scene,
            Dimension::Weather => &self.weather,
            Dimension::TimeOfDay => &self.time_of_day,
            Dimension::CrowdDensity => &self.crowd_density,
        }
    }

    pub fn abstain() -> Self {
        CategoryLabels {
            scene: ABSTAIN.into(),
            weather: ABSTAIN.into(),
            time_of_day: ABSTAIN.into(),
            crowd_density: ABSTAIN.into(),
        }
    }
}

/// Closed label vocabularies, one per dimension. `"abstain"` is always
/// accepted in addition to the listed labels.
///
/// The defaults are a best-effort reading of the published label counts:
/// four scene types, four weather types, four times of day and five crowd
/// density levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Vocabulary {
    pub scene: Vec<String>,
    pub weather: Vec<String>,
    pub time_of_day: Vec<String>,
    pub crowd_density: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            scene: strings(&["urban", "nature", "indoor", "waterfront"]),
            weather: strings(&["sunny", "cloudy", "rainy", "snowy"]),
            time_of_day: strings(&["daytime", "nighttime", "dawn", "dusk"]),
            crowd_density: strings(&["empty", "sparse", "moderate", "busy", "crowded"]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{dimension} label {label:?} is not in the configured vocabulary {allowed:?} (or \"abstain\")")]
pub struct VocabularyError {
    pub dimension: Dimension,
    pub label: String,
    pub allowed: Vec<String>,
}

impl Vocabulary {
    pub fn labels(&self, dim: Dimension) -> &[String] {
        match dim {
            Dimension::Scene => &self.scene,
            Dimension::Weather => &self.weather,
            Dimension::TimeOfDay => &self.time_of_day,
            Dimension::CrowdDensity => &self.crowd_density,
        }
    }

    pub fn check(&self, labels: &CategoryLabels) -> Result<(), VocabularyError> {
        for dim in Dimension::ALL {
            let label = labels.get(dim);
            let allowed = self.labels(dim);
            if label != ABSTAIN && !allowed.iter().any(|l| l == label) {
                return Err(VocabularyError {
                    dimension: dim,
                    label: label.to_string(),
                    allowed: allowed.to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Empty label map for every dimension, keyed by label (including `abstain`).
    pub fn empty_histograms(&self) -> BTreeMap<Dimension, BTreeMap<String, u64>> {
        Dimension::ALL
            .iter()
            .map(|&d| {
                let mut m: BTreeMap<String, u64> =
                    self.labels(d).iter().map(|l| (l.clone(), 0)).collect();
                m.insert(ABSTAIN.to_string(), 0);
                (d, m)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_vocabulary_sizes() {
        let v = Vocabulary::default();
        assert_eq!(v.scene.len(), 4);
        assert_eq!(v.weather.len(), 4);
        assert_eq!(v.time_of_day.len(), 4);
        assert_eq!(v.crowd_density.len(), 5);
    }

    #[test]
    fn out_of_vocabulary_label_names_the_dimension() {
        let v = Vocabulary::default();
        let mut labels = CategoryLabels::abstain();
        assert!(v.check(&labels).is_ok());
        labels.weather = "hail".into();
        let err = v.check(&labels).unwrap_err();
        assert_eq!(err.dimension, Dimension::Weather);
        assert!(err.to_string().contains("sunny"));
    }
}
