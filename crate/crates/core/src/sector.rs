//! GICS sectors in the fixed order used to arrange matrix rows.

use core::fmt;

/// The eleven GICS sectors. Declaration order is the row order of every
/// data and correlation matrix, so `Ord` sorts rows correctly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    Energy,
    Materials,
    Industrials,
    ConsumerDiscretionary,
    ConsumerStaples,
    HealthCare,
    Financials,
    RealEstate,
    InformationTechnology,
    CommunicationServices,
    Utilities,
}

impl Sector {
    pub const ALL: [Sector; 11] = [
        Sector::Energy,
        Sector::Materials,
        Sector::Industrials,
        Sector::ConsumerDiscretionary,
        Sector::ConsumerStaples,
        Sector::HealthCare,
        Sector::Financials,
        Sector::RealEstate,
        Sector::InformationTechnology,
        Sector::CommunicationServices,
        Sector::Utilities,
    ];

    /// Short code used in sector files and heatmap legends.
    pub fn code(self) -> &'static str {
        match self {
            Sector::Energy => "E",
            Sector::Materials => "M",
            Sector::Industrials => "I",
            Sector::ConsumerDiscretionary => "CD",
            Sector::ConsumerStaples => "CST",
            Sector::HealthCare => "HC",
            Sector::Financials => "F",
            Sector::RealEstate => "RE",
            Sector::InformationTechnology => "IT",
            Sector::CommunicationServices => "CSE",
            Sector::Utilities => "U",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sector::Energy => "Energy",
            Sector::Materials => "Materials",
            Sector::Industrials => "Industrials",
            Sector::ConsumerDiscretionary => "Consumer Discretionary",
            Sector::ConsumerStaples => "Consumer Staples",
            Sector::HealthCare => "Health Care",
            Sector::Financials => "Financials",
            Sector::RealEstate => "Real Estate",
            Sector::InformationTechnology => "Information Technology",
            Sector::CommunicationServices => "Communication Services",
            Sector::Utilities => "Utilities",
        }
    }

    /// Parses a short code or a full sector name, ignoring ASCII case and
    /// surrounding whitespace.
    pub fn parse(text: &str) -> Option<Sector> {
        let text = text.trim();
        Sector::ALL
            .into_iter()
            .find(|s| s.code().eq_ignore_ascii_case(text) || s.name().eq_ignore_ascii_case(text))
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_matches_gics_table() {
        let codes: std::vec::Vec<_> = Sector::ALL.iter().map(|s| s.code()).collect();
        assert_eq!(
            codes,
            ["E", "M", "I", "CD", "CST", "HC", "F", "RE", "IT", "CSE", "U"]
        );
        assert!(Sector::Energy < Sector::Utilities);
    }

    #[test]
    fn parse_accepts_codes_and_names() {
        assert_eq!(Sector::parse("cst"), Some(Sector::ConsumerStaples));
        assert_eq!(Sector::parse(" Health Care "), Some(Sector::HealthCare));
        assert_eq!(Sector::parse("XX"), None);
        for s in Sector::ALL {
            assert_eq!(Sector::parse(s.code()), Some(s));
        }
    }
}
