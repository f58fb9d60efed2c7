use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const NUM_MFCC: usize = 13;

/// A feature channel. The declaration order is the canonical channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureId {
    F0,
    Energy,
    Vprob,
    Jitter,
    Djitter,
    Shimmer,
    Hnr,
    Sflux,
    Sharp,
    Zcr,
    /// Cepstral coefficient `0..13`.
    Mfcc(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureGroup {
    Prosodic,
    VoiceQuality,
    Spectral,
    Temporal,
    Cepstral,
}

impl FeatureId {
    pub const HANDCRAFTED: [FeatureId; 10] = [
        FeatureId::F0,
        FeatureId::Energy,
        FeatureId::Vprob,
        FeatureId::Jitter,
        FeatureId::Djitter,
        FeatureId::Shimmer,
        FeatureId::Hnr,
        FeatureId::Sflux,
        FeatureId::Sharp,
        FeatureId::Zcr,
    ];

    pub fn mfcc() -> Vec<FeatureId> {
        (0..NUM_MFCC as u8).map(FeatureId::Mfcc).collect()
    }

    /// Handcrafted followed by MFCC, 23 channels.
    pub fn all() -> Vec<FeatureId> {
        let mut v = Self::HANDCRAFTED.to_vec();
        v.extend(Self::mfcc());
        v
    }

    pub fn index(self) -> usize {
        match self {
            FeatureId::Mfcc(k) => 10 + k as usize,
            other => Self::HANDCRAFTED.iter().position(|&h| h == other).unwrap(),
        }
    }

    pub fn group(self) -> FeatureGroup {
        use FeatureId::*;
        match self {
            F0 | Energy | Vprob => FeatureGroup::Prosodic,
            Jitter | Djitter | Shimmer | Hnr => FeatureGroup::VoiceQuality,
            Sflux | Sharp => FeatureGroup::Spectral,
            Zcr => FeatureGroup::Temporal,
            Mfcc(_) => FeatureGroup::Cepstral,
        }
    }

    pub fn name(self) -> String {
        match self {
            FeatureId::F0 => "F0".into(),
            FeatureId::Energy => "ENERGY".into(),
            FeatureId::Vprob => "VPROB".into(),
            FeatureId::Jitter => "JITTER".into(),
            FeatureId::Djitter => "DJITTER".into(),
            FeatureId::Shimmer => "SHIMMER".into(),
            FeatureId::Hnr => "HNR".into(),
            FeatureId::Sflux => "SFLUX".into(),
            FeatureId::Sharp => "SHARP".into(),
            FeatureId::Zcr => "ZCR".into(),
            FeatureId::Mfcc(k) => format!("MFCC_{k}"),
        }
    }

    /// Long-form label, as used in ranking reports.
    pub fn description(self) -> String {
        match self {
            FeatureId::F0 => "Fundamental Frequency".into(),
            FeatureId::Energy => "Energy".into(),
            FeatureId::Vprob => "Voicing Probability".into(),
            FeatureId::Jitter => "Jitter".into(),
            FeatureId::Djitter => "Derivative of Jitter".into(),
            FeatureId::Shimmer => "Shimmer".into(),
            FeatureId::Hnr => "Harmonic-to-Noise Ratio".into(),
            FeatureId::Sflux => "Spectral Flux".into(),
            FeatureId::Sharp => "Psychoacoustic Sharpness".into(),
            FeatureId::Zcr => "Zero Crossing Rate".into(),
            FeatureId::Mfcc(k) => format!("MFCC {k}"),
        }
    }

    /// Y-axis label for contour plots.
    pub fn unit(self) -> &'static str {
        match self {
            FeatureId::F0 => "Hz",
            FeatureId::Energy => "energy",
            FeatureId::Vprob => "probability",
            FeatureId::Jitter | FeatureId::Djitter | FeatureId::Shimmer => "normalized",
            FeatureId::Hnr => "log-HNR",
            FeatureId::Sflux => "flux",
            FeatureId::Sharp => "Bark",
            FeatureId::Zcr => "crossings/s",
            FeatureId::Mfcc(_) => "coefficient",
        }
    }

    pub fn valid_names() -> String {
        Self::all().iter().map(|f| f.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let found = Self::all().into_iter().find(|f| f.name() == up);
        found.ok_or_else(|| Error::UnknownFeature {
            got: s.to_string(),
            valid: Self::valid_names(),
        })
    }
}

impl Serialize for FeatureId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse a feature-set spec: `handcrafted`, `mfcc`, `all`, `top3`, or a
/// comma-separated list of ids. Sets may be joined with `+`
/// (`mfcc+top3`). Duplicates are rejected.
pub fn parse_feature_set(spec: &str) -> Result<Vec<FeatureId>> {
    let mut out: Vec<FeatureId> = Vec::new();
    for part in spec.split('+') {
        let part = part.trim();
        let ids: Vec<FeatureId> = match part.to_ascii_lowercase().as_str() {
            "handcrafted" => FeatureId::HANDCRAFTED.to_vec(),
            "mfcc" => FeatureId::mfcc(),
            "all" => FeatureId::all(),
            "top3" => vec![FeatureId::Energy, FeatureId::Hnr, FeatureId::F0],
            "least3" => vec![FeatureId::Jitter, FeatureId::Zcr, FeatureId::Sharp],
            "" => return Err(Error::InvalidArgument(format!("empty feature set in `{spec}`"))),
            _ => part.split(',').map(str::parse).collect::<Result<_>>()?,
        };
        for id in ids {
            if out.contains(&id) {
                return Err(Error::InvalidArgument(format!("feature {id} listed twice in `{spec}`")));
            }
            out.push(id);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_partition_handcrafted() {
        let count = |g| FeatureId::HANDCRAFTED.iter().filter(|f| f.group() == g).count();
        assert_eq!(count(FeatureGroup::Prosodic), 3);
        assert_eq!(count(FeatureGroup::VoiceQuality), 4);
        assert_eq!(count(FeatureGroup::Spectral), 2);
        assert_eq!(count(FeatureGroup::Temporal), 1);
    }

    #[test]
    fn names_roundtrip_and_order() {
        for (i, f) in FeatureId::all().into_iter().enumerate() {
            assert_eq!(f.index(), i);
            assert_eq!(f.name().parse::<FeatureId>().unwrap(), f);
        }
        assert_eq!("mfcc_12".parse::<FeatureId>().unwrap(), FeatureId::Mfcc(12));
        let e = "foo".parse::<FeatureId>().unwrap_err().to_string();
        assert!(e.contains("foo") && e.contains("SHIMMER"));
    }

    #[test]
    fn set_specs() {
        assert_eq!(parse_feature_set("handcrafted").unwrap().len(), 10);
        assert_eq!(parse_feature_set("all").unwrap().len(), 23);
        let s = parse_feature_set("mfcc+ENERGY,HNR,F0").unwrap();
        assert_eq!(s.len(), 16);
        assert_eq!(parse_feature_set("mfcc+top3").unwrap(), s);
        assert!(parse_feature_set("handcrafted+F0").is_err());
        assert!(parse_feature_set("F0,bogus").is_err());
    }

    #[test]
    fn serde_as_names() {
        let j = serde_json::to_string(&vec![FeatureId::Hnr, FeatureId::Mfcc(3)]).unwrap();
        assert_eq!(j, r#"["HNR","MFCC_3"]"#);
        let back: Vec<FeatureId> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, vec![FeatureId::Hnr, FeatureId::Mfcc(3)]);
    }
}
