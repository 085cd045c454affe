//! Clickstream ingest: log line parsing, robot filtering and country
//! attribution.

mod country;
mod record;
mod robots;

pub use country::{attribute_country, CountryCode, InvalidCountryCode};
pub use record::{
    attribution_year, is_download, is_skippable, parse_log_line, Action, Channel, Column, LogReader, LogRecord,
    ParseError, ParseErrorKind, ReadError, UserId, ATTRIBUTION_OFFSET_SECS, FIELD_COUNT,
};
pub use robots::{is_robot, PolicyError, RobotPolicy};
