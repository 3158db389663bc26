use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

/// The seven resume-section labels, in on-screen button order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Experience,
    PersonalInfo,
    Summary,
    Education,
    Qualification,
    Skill,
    Object,
}

impl Label {
    pub const COUNT: usize = 7;

    pub const ALL: [Label; Label::COUNT] = [
        Label::Experience,
        Label::PersonalInfo,
        Label::Summary,
        Label::Education,
        Label::Qualification,
        Label::Skill,
        Label::Object,
    ];

    /// Canonical token used in annotation files and the HTTP API.
    pub fn token(self) -> &'static str {
        match self {
            Label::Experience => "EXPERIENCE",
            Label::PersonalInfo => "PI",
            Label::Summary => "SUMMARY",
            Label::Education => "EDUCATION",
            Label::Qualification => "QUALIFICATION",
            Label::Skill => "SKILL",
            Label::Object => "OBJECT",
        }
    }

    /// Position in [`Label::ALL`].
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn tokens() -> Vec<&'static str> {
        Label::ALL.iter().map(|l| l.token()).collect()
    }
}

/// Case-insensitive parse of a canonical label token.
pub fn parse_label(token: &str) -> Result<Label, CorpusError> {
    Label::ALL
        .iter()
        .copied()
        .find(|l| l.token().eq_ignore_ascii_case(token))
        .ok_or_else(|| CorpusError::UnknownLabel(token.to_string()))
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_label(s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_label(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_tokens_parse() {
        assert_eq!(parse_label("EXPERIENCE").unwrap(), Label::Experience);
        assert_eq!(parse_label("pi").unwrap(), Label::PersonalInfo);
        assert_eq!(parse_label("Qualification").unwrap(), Label::Qualification);
    }

    #[test]
    fn prior_other_label_is_rejected() {
        assert!(matches!(parse_label("OTHER"), Err(CorpusError::UnknownLabel(t)) if t == "OTHER"));
        assert!(parse_label("").is_err());
        assert!(parse_label("PERSONALINFO").is_err());
    }

    #[test]
    fn tokens_are_a_bijection() {
        for (i, l) in Label::ALL.iter().enumerate() {
            assert_eq!(l.ordinal(), i);
            assert_eq!(parse_label(l.token()).unwrap(), *l);
            assert_eq!(parse_label(&l.token().to_lowercase()).unwrap(), *l);
        }
        let mut tokens = Label::tokens();
        tokens.sort();
        tokens.dedup();
        assert_eq!(tokens.len(), Label::COUNT);
    }

    #[test]
    fn serde_uses_tokens() {
        assert_eq!(serde_json::to_string(&Label::PersonalInfo).unwrap(), "\"PI\"");
        let l: Label = serde_json::from_str("\"skill\"").unwrap();
        assert_eq!(l, Label::Skill);
    }
}
