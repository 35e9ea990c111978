use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    EastAsiaPacific,
    EuropeCentralAsia,
    LatinAmericaCaribbean,
    MiddleEastNorthAfrica,
    NorthAmerica,
    SouthAsia,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::EastAsiaPacific,
        Region::EuropeCentralAsia,
        Region::LatinAmericaCaribbean,
        Region::MiddleEastNorthAfrica,
        Region::NorthAmerica,
        Region::SouthAsia,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::EastAsiaPacific => "east_asia_pacific",
            Region::EuropeCentralAsia => "europe_central_asia",
            Region::LatinAmericaCaribbean => "latin_america_caribbean",
            Region::MiddleEastNorthAfrica => "middle_east_north_africa",
            Region::NorthAmerica => "north_america",
            Region::SouthAsia => "south_asia",
        }
    }

    /// Built-in region for an ISO alpha-2 code, if known.
    pub fn of_country(code: &str) -> Option<Region> {
        use Region::*;
        let region = match code.to_ascii_uppercase().as_str() {
            "AU" | "CN" | "HK" | "ID" | "JP" | "KR" | "MY" | "NZ" | "PH" | "SG" | "TH" | "TW"
            | "VN" => EastAsiaPacific,
            "AT" | "BE" | "CH" | "CZ" | "DE" | "DK" | "ES" | "FI" | "FR" | "GB" | "GR" | "HU"
            | "IE" | "IT" | "KZ" | "NL" | "NO" | "PL" | "PT" | "RO" | "RU" | "SE" | "TR"
            | "UA" => EuropeCentralAsia,
            "AR" | "BR" | "CL" | "CO" | "MX" | "PE" | "VE" | "EC" => LatinAmericaCaribbean,
            "AE" | "DZ" | "EG" | "IL" | "IQ" | "IR" | "JO" | "MA" | "SA" | "TN" => {
                MiddleEastNorthAfrica
            }
            "CA" | "US" => NorthAmerica,
            "BD" | "IN" | "LK" | "NP" | "PK" => SouthAsia,
            _ => return None,
        };
        Some(region)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Region::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| AnalyticsError::InvalidInput(format!("unknown region `{s}`")))
    }
}
