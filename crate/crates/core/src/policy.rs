use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Schema;
use crate::error::{Error, Result};

/// Partition of the features into desired, ambivalent and prohibited sets.
/// Features not listed anywhere are ambivalent.
///
/// Serialized as `{desired: [...], prohibited: [...]}` with an optional
/// explicit `ambivalent` list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyRepr")]
pub struct FeaturePolicy {
    pub desired: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub ambivalent: BTreeSet<String>,
    pub prohibited: BTreeSet<String>,
}

#[derive(Deserialize)]
struct PolicyRepr {
    #[serde(default)]
    desired: BTreeSet<String>,
    #[serde(default)]
    ambivalent: BTreeSet<String>,
    #[serde(default)]
    prohibited: BTreeSet<String>,
}

impl TryFrom<PolicyRepr> for FeaturePolicy {
    type Error = Error;

    fn try_from(r: PolicyRepr) -> Result<Self> {
        let p = FeaturePolicy {
            desired: r.desired,
            ambivalent: r.ambivalent,
            prohibited: r.prohibited,
        };
        p.check_disjoint()?;
        Ok(p)
    }
}

impl FeaturePolicy {
    pub fn new<D, P>(desired: D, prohibited: P) -> Result<Self>
    where
        D: IntoIterator,
        D::Item: Into<String>,
        P: IntoIterator,
        P::Item: Into<String>,
    {
        let p = FeaturePolicy {
            desired: desired.into_iter().map(Into::into).collect(),
            ambivalent: BTreeSet::new(),
            prohibited: prohibited.into_iter().map(Into::into).collect(),
        };
        p.check_disjoint()?;
        Ok(p)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    fn check_disjoint(&self) -> Result<()> {
        let overlap = self
            .desired
            .intersection(&self.prohibited)
            .chain(self.desired.intersection(&self.ambivalent))
            .chain(self.prohibited.intersection(&self.ambivalent))
            .next();
        match overlap {
            Some(f) => Err(Error::Config(format!(
                "feature `{f}` is listed in more than one policy class"
            ))),
            None => Ok(()),
        }
    }

    pub fn is_prohibited(&self, feature: &str) -> bool {
        self.prohibited.contains(feature)
    }

    /// Every listed feature must exist in `schema`.
    pub fn validate_against(&self, schema: &Schema) -> Result<()> {
        for f in self.desired.iter().chain(&self.ambivalent).chain(&self.prohibited) {
            if !schema.contains(f) {
                return Err(Error::MissingFeature(f.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_and_disjointness() {
        let p: FeaturePolicy = serde_json::from_str(r#"{"prohibited":["race"]}"#).unwrap();
        assert!(p.desired.is_empty());
        assert!(p.is_prohibited("race"));
        assert!(serde_json::from_str::<FeaturePolicy>(r#"{"desired":["race"],"prohibited":["race"]}"#).is_err());
        assert!(FeaturePolicy::new(["a"], ["a"]).is_err());
    }
}
