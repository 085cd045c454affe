//! Hostname to country attribution.
//!
//! The country of a request is read off the top-level domain of its
//! hostname. Country-code TLDs map to their ISO 3166-1 alpha-2 code
//! (with the `uk` → `GB` exception). Of the generic TLDs only `edu`, `gov`,
//! `mil` and `net` are attributed, all to the USA; everything else is
//! [`CountryCode::Unknown`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// ISO 3166-1 alpha-2 officially assigned codes.
const ISO_ALPHA2: &[&str] = &[
    "AD", "AE", "AF", "AG", "AI", "AL", "AM", "AO", "AQ", "AR", "AS", "AT", "AU", "AW", "AX", "AZ",
    "BA", "BB", "BD", "BE", "BF", "BG", "BH", "BI", "BJ", "BL", "BM", "BN", "BO", "BQ", "BR", "BS",
    "BT", "BV", "BW", "BY", "BZ", "CA", "CC", "CD", "CF", "CG", "CH", "CI", "CK", "CL", "CM", "CN",
    "CO", "CR", "CU", "CV", "CW", "CX", "CY", "CZ", "DE", "DJ", "DK", "DM", "DO", "DZ", "EC", "EE",
    "EG", "EH", "ER", "ES", "ET", "FI", "FJ", "FK", "FM", "FO", "FR", "GA", "GB", "GD", "GE", "GF",
    "GG", "GH", "GI", "GL", "GM", "GN", "GP", "GQ", "GR", "GS", "GT", "GU", "GW", "GY", "HK", "HM",
    "HN", "HR", "HT", "HU", "ID", "IE", "IL", "IM", "IN", "IO", "IQ", "IR", "IS", "IT", "JE", "JM",
    "JO", "JP", "KE", "KG", "KH", "KI", "KM", "KN", "KP", "KR", "KW", "KY", "KZ", "LA", "LB", "LC",
    "LI", "LK", "LR", "LS", "LT", "LU", "LV", "LY", "MA", "MC", "MD", "ME", "MF", "MG", "MH", "MK",
    "ML", "MM", "MN", "MO", "MP", "MQ", "MR", "MS", "MT", "MU", "MV", "MW", "MX", "MY", "MZ", "NA",
    "NC", "NE", "NF", "NG", "NI", "NL", "NO", "NP", "NR", "NU", "NZ", "OM", "PA", "PE", "PF", "PG",
    "PH", "PK", "PL", "PM", "PN", "PR", "PS", "PT", "PW", "PY", "QA", "RE", "RO", "RS", "RU", "RW",
    "SA", "SB", "SC", "SD", "SE", "SG", "SH", "SI", "SJ", "SK", "SL", "SM", "SN", "SO", "SR", "SS",
    "ST", "SV", "SX", "SY", "SZ", "TC", "TD", "TF", "TG", "TH", "TJ", "TK", "TL", "TM", "TN", "TO",
    "TR", "TT", "TV", "TW", "TZ", "UA", "UG", "UM", "US", "UY", "UZ", "VA", "VC", "VE", "VG", "VI",
    "VN", "VU", "WF", "WS", "YE", "YT", "ZA", "ZM", "ZW",
];

/// Generic TLDs attributed to the USA.
const US_GENERIC_TLDS: &[&str] = &["edu", "gov", "mil", "net"];

/// Error returned when text is not a valid country code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid country code {0:?}: expected two uppercase letters or UNKNOWN")]
pub struct InvalidCountryCode(pub String);

/// An ISO 3166-1 alpha-2 code, or `Unknown` when no attribution is possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CountryCode {
    Known([u8; 2]),
    Unknown,
}

impl CountryCode {
    pub const UNKNOWN_TOKEN: &'static str = "UNKNOWN";

    /// Builds a code from two uppercase ASCII letters.
    pub fn new(code: &str) -> Result<Self, InvalidCountryCode> {
        code.parse()
    }

    pub fn as_str(&self) -> &str {
        match self {
            // Only ever constructed from ASCII uppercase letters.
            CountryCode::Known(bytes) => std::str::from_utf8(bytes).unwrap_or(Self::UNKNOWN_TOKEN),
            CountryCode::Unknown => Self::UNKNOWN_TOKEN,
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, CountryCode::Known(_))
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CountryCode {
    type Err = InvalidCountryCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == Self::UNKNOWN_TOKEN {
            return Ok(CountryCode::Unknown);
        }
        let bytes = s.as_bytes();
        if bytes.len() == 2 && bytes.iter().all(u8::is_ascii_uppercase) {
            Ok(CountryCode::Known([bytes[0], bytes[1]]))
        } else {
            Err(InvalidCountryCode(s.to_string()))
        }
    }
}

impl TryFrom<String> for CountryCode {
    type Error = InvalidCountryCode;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<CountryCode> for String {
    fn from(code: CountryCode) -> Self {
        code.as_str().to_string()
    }
}

/// Attributes a request to a country from its hostname.
///
/// The IP address is accepted for interface symmetry with the log record but
/// is not consulted: attribution goes through the reverse-resolved hostname.
/// Total: any input, including garbage, yields a valid code.
pub fn attribute_country(hostname: &str, _ip: &str) -> CountryCode {
    let host = hostname.trim().trim_end_matches('.');
    if host.is_empty() {
        return CountryCode::Unknown;
    }
    let Some(label) = host.rsplit('.').next() else {
        return CountryCode::Unknown;
    };
    // A bare label with no dot is not a usable domain name.
    if label.len() == host.len() {
        return CountryCode::Unknown;
    }
    let label = label.to_ascii_lowercase();
    if US_GENERIC_TLDS.contains(&label.as_str()) {
        return CountryCode::Known(*b"US");
    }
    if label == "uk" {
        return CountryCode::Known(*b"GB");
    }
    if label.len() != 2 || !label.bytes().all(|b| b.is_ascii_lowercase()) {
        return CountryCode::Unknown;
    }
    let upper = label.to_ascii_uppercase();
    if ISO_ALPHA2.binary_search(&upper.as_str()).is_ok() {
        CountryCode::Known([upper.as_bytes()[0], upper.as_bytes()[1]])
    } else {
        CountryCode::Unknown
    }
}
