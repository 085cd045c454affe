//! Clickstream log records and the 8-column TSV line format.
//!
//! Column order: timestamp, user_id, ip, hostname, user_agent, action,
//! pub_id, channel. An empty column denotes a missing optional field.

use std::fmt;
use std::io::BufRead;
use std::net::IpAddr;
use std::str::FromStr;

use chrono::{DateTime, Datelike, FixedOffset, SecondsFormat};

pub const FIELD_COUNT: usize = 8;
pub const COMMENT_PREFIX: char = '#';

/// Records are attributed to calendar years at this fixed offset (UTC−05:00,
/// no daylight saving), so year boundaries do not depend on the local zone.
pub const ATTRIBUTION_OFFSET_SECS: i32 = -5 * 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Column {
    Timestamp,
    UserId,
    Ip,
    Hostname,
    UserAgent,
    Action,
    PubId,
    Channel,
}

impl Column {
    pub const ALL: [Column; FIELD_COUNT] = [
        Column::Timestamp,
        Column::UserId,
        Column::Ip,
        Column::Hostname,
        Column::UserAgent,
        Column::Action,
        Column::PubId,
        Column::Channel,
    ];

    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Column::Timestamp => "timestamp",
            Column::UserId => "user_id",
            Column::Ip => "ip",
            Column::Hostname => "hostname",
            Column::UserAgent => "user_agent",
            Column::Action => "action",
            Column::PubId => "pub_id",
            Column::Channel => "channel",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {} ({})", self.index(), self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("WRONG_FIELD_COUNT: expected {FIELD_COUNT} tab-separated fields, found {0}")]
    WrongFieldCount(usize),
    #[error("BAD_TIMESTAMP: {0:?} is not an RFC 3339 timestamp with numeric offset")]
    BadTimestamp(String),
    #[error("EMPTY_PUB_ID: {0} requires a publication identifier")]
    EmptyPubId(Action),
    #[error("BAD_ACTION_TOKEN: {0:?}")]
    BadActionToken(String),
    #[error("BAD_CHANNEL_TOKEN: {0:?}")]
    BadChannelToken(String),
    #[error("BAD_IP: {0:?} is not an IPv4 or IPv6 address")]
    BadIp(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: Column,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Download,
    AbstractView,
    Other,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Download => "DOWNLOAD",
            Action::AbstractView => "ABSTRACT_VIEW",
            Action::Other => "OTHER",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DOWNLOAD" => Ok(Action::Download),
            "ABSTRACT_VIEW" => Ok(Action::AbstractView),
            "OTHER" => Ok(Action::Other),
            other => Err(ParseErrorKind::BadActionToken(other.to_string())),
        }
    }
}

/// How the user reached the service: directly, or through an external
/// search engine such as Google Scholar. Tagged upstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Direct,
    SearchEngine,
    Unknown,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Direct, Channel::SearchEngine, Channel::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Direct => "DIRECT",
            Channel::SearchEngine => "SEARCH_ENGINE",
            Channel::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DIRECT" => Ok(Channel::Direct),
            "SEARCH_ENGINE" => Ok(Channel::SearchEngine),
            "UNKNOWN" | "" => Ok(Channel::Unknown),
            other => Err(ParseErrorKind::BadChannelToken(other.to_string())),
        }
    }
}

/// Opaque user token. An empty column (or the literal sentinel) means the
/// request could not be tied to a user.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UserId {
    Token(String),
    Unidentified,
}

impl UserId {
    pub const SENTINEL: &'static str = "UNIDENTIFIED";

    pub fn token(&self) -> Option<&str> {
        match self {
            UserId::Token(t) => Some(t),
            UserId::Unidentified => None,
        }
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        if s.is_empty() || s == Self::SENTINEL {
            UserId::Unidentified
        } else {
            UserId::Token(s.to_string())
        }
    }
}

/// One user interaction with the service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub timestamp: DateTime<FixedOffset>,
    pub user_id: UserId,
    pub ip: IpAddr,
    pub hostname: String,
    pub user_agent: String,
    pub action: Action,
    pub pub_id: String,
    pub channel: Channel,
}

impl LogRecord {
    /// Calendar year of the interaction, read at UTC−05:00.
    pub fn year(&self) -> i32 {
        attribution_year(&self.timestamp)
    }

    /// Renders the record as one TSV line, without the trailing newline.
    ///
    /// Text fields must not contain tabs or line breaks for the output to
    /// parse back.
    pub fn to_tsv(&self) -> String {
        let user = self.user_id.token().unwrap_or("");
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, false),
            user,
            self.ip,
            self.hostname,
            self.user_agent,
            self.action,
            self.pub_id,
            self.channel,
        )
    }
}

pub fn attribution_year(ts: &DateTime<FixedOffset>) -> i32 {
    let offset = FixedOffset::east_opt(ATTRIBUTION_OFFSET_SECS).expect("offset in range");
    ts.with_timezone(&offset).year()
}

/// Full-text access, the only action counted as a download.
pub fn is_download(record: &LogRecord) -> bool {
    record.action == Action::Download
}

/// Parses one TSV log line. `line_number` is 1-based and only used for error
/// reporting. A trailing `\n` or `\r\n` is tolerated.
pub fn parse_log_line(line: &str, line_number: usize) -> Result<LogRecord, ParseError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let err = |column, kind| ParseError { line: line_number, column, kind };

    let mut fields = [""; FIELD_COUNT];
    let mut count = 0;
    for field in line.split('\t') {
        if count < FIELD_COUNT {
            fields[count] = field;
        }
        count += 1;
    }
    if count != FIELD_COUNT {
        // First missing column, or the last one when extra fields trail it.
        let column = Column::ALL[count.min(FIELD_COUNT - 1)];
        return Err(err(column, ParseErrorKind::WrongFieldCount(count)));
    }
    let [ts, user, ip, host, agent, action, pub_id, channel] = fields;

    let timestamp = DateTime::parse_from_rfc3339(ts)
        .map_err(|_| err(Column::Timestamp, ParseErrorKind::BadTimestamp(ts.to_string())))?;
    let ip: IpAddr = ip
        .parse()
        .map_err(|_| err(Column::Ip, ParseErrorKind::BadIp(ip.to_string())))?;
    let action: Action = action.parse().map_err(|k| err(Column::Action, k))?;
    if pub_id.is_empty() && action != Action::Other {
        return Err(err(Column::PubId, ParseErrorKind::EmptyPubId(action)));
    }
    let channel: Channel = channel.parse().map_err(|k| err(Column::Channel, k))?;

    Ok(LogRecord {
        timestamp,
        user_id: UserId::from(user),
        ip,
        hostname: host.to_string(),
        user_agent: agent.to_string(),
        action,
        pub_id: pub_id.to_string(),
        channel,
    })
}

/// A line of a log file: either skipped (comment or blank) or a record.
pub fn is_skippable(line: &str) -> bool {
    let trimmed = line.trim_end_matches(['\n', '\r']);
    trimmed.is_empty() || trimmed.starts_with(COMMENT_PREFIX)
}

/// Streams records out of a log file, skipping comments and blank lines.
pub struct LogReader<R> {
    inner: R,
    line_number: usize,
    buf: String,
}

impl<R: BufRead> LogReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, line_number: 0, buf: String::new() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl<R: BufRead> Iterator for LogReader<R> {
    type Item = Result<LogRecord, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_number += 1;
            if is_skippable(&self.buf) {
                continue;
            }
            return Some(parse_log_line(&self.buf, self.line_number).map_err(Into::into));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LINE: &str = "2008-01-15T09:30:00-05:00\tu123\t131.142.1.1\tcfa.harvard.edu\tMozilla/5.0\tDOWNLOAD\t2007ApJ...999..123H\tDIRECT";

    #[test]
    fn parses_reference_line() {
        let rec = parse_log_line(LINE, 1).unwrap();
        assert_eq!(rec.action, Action::Download);
        assert_eq!(rec.year(), 2008);
        assert_eq!(rec.user_id, UserId::Token("u123".into()));
        assert_eq!(rec.pub_id, "2007ApJ...999..123H");
        assert_eq!(rec.channel, Channel::Direct);
        assert!(is_download(&rec));
        assert_eq!(rec.to_tsv(), LINE);
    }

    #[test]
    fn trailing_newline_tolerated() {
        let with_nl = format!("{LINE}\n");
        let with_crlf = format!("{LINE}\r\n");
        assert_eq!(parse_log_line(&with_nl, 1).unwrap(), parse_log_line(LINE, 1).unwrap());
        assert_eq!(parse_log_line(&with_crlf, 1).unwrap(), parse_log_line(LINE, 1).unwrap());
    }

    #[test]
    fn bad_action_token() {
        let line = LINE.replace("DOWNLOAD", "FULLTEXT");
        let e = parse_log_line(&line, 7).unwrap_err();
        assert_eq!(e.line, 7);
        assert_eq!(e.column, Column::Action);
        assert_eq!(e.kind, ParseErrorKind::BadActionToken("FULLTEXT".into()));
    }

    #[test]
    fn empty_pub_id() {
        let line = LINE.replace("2007ApJ...999..123H", "");
        let e = parse_log_line(&line, 3).unwrap_err();
        assert_eq!(e.column, Column::PubId);
        assert_eq!(e.kind, ParseErrorKind::EmptyPubId(Action::Download));

        let view = line.replace("DOWNLOAD", "ABSTRACT_VIEW");
        assert!(matches!(
            parse_log_line(&view, 3).unwrap_err().kind,
            ParseErrorKind::EmptyPubId(Action::AbstractView)
        ));
        let other = line.replace("DOWNLOAD", "OTHER");
        assert_eq!(parse_log_line(&other, 3).unwrap().action, Action::Other);
    }

    #[test]
    fn wrong_field_count() {
        let e = parse_log_line("a\tb\tc", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::WrongFieldCount(3));
        assert_eq!(e.column, Column::Hostname);
        let e = parse_log_line(&format!("{LINE}\textra"), 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::WrongFieldCount(9));
    }

    #[test]
    fn bad_timestamp() {
        for ts in ["2008-01-15 09:30:00", "2008-01-15T09:30:00", "yesterday", ""] {
            let line = LINE.replace("2008-01-15T09:30:00-05:00", ts);
            let e = parse_log_line(&line, 1).unwrap_err();
            assert_eq!(e.column, Column::Timestamp, "{ts}");
        }
    }

    #[test]
    fn bad_ip_and_channel() {
        let e = parse_log_line(&LINE.replace("131.142.1.1", "131.142.1"), 1).unwrap_err();
        assert_eq!(e.column, Column::Ip);
        let e = parse_log_line(&LINE.replace("DIRECT", "EMAIL"), 1).unwrap_err();
        assert_eq!(e.column, Column::Channel);
        let rec = parse_log_line(&LINE.replace("\tDIRECT", "\t"), 1).unwrap();
        assert_eq!(rec.channel, Channel::Unknown);
    }

    #[test]
    fn unidentified_user() {
        let rec = parse_log_line(&LINE.replace("\tu123\t", "\t\t"), 1).unwrap();
        assert_eq!(rec.user_id, UserId::Unidentified);
        let rec = parse_log_line(&LINE.replace("\tu123\t", "\tUNIDENTIFIED\t"), 1).unwrap();
        assert_eq!(rec.user_id, UserId::Unidentified);
    }

    #[test]
    fn year_attribution_uses_fixed_minus_five() {
        let at = |ts: &str| parse_log_line(&LINE.replace("2008-01-15T09:30:00-05:00", ts), 1).unwrap().year();
        // 2009-01-01T03:00Z is still 2008-12-31 at UTC-5.
        assert_eq!(at("2009-01-01T03:00:00+00:00"), 2008);
        assert_eq!(at("2009-01-01T05:00:00Z"), 2009);
        // No DST: a July timestamp at EDT midnight lands in the previous hour.
        assert_eq!(at("2010-01-01T00:30:00-04:00"), 2009);
        assert_eq!(at("2009-12-31T23:59:59-05:00"), 2009);
        assert_eq!(at("2010-01-01T00:00:00-05:00"), 2010);
    }

    #[test]
    fn reader_skips_comments_and_blank_lines() {
        let text = format!("# header\n{LINE}\n\n{LINE}\n");
        let recs: Vec<_> = LogReader::new(text.as_bytes()).collect::<Result<_, _>>().unwrap();
        assert_eq!(recs.len(), 2);

        let text = format!("# header\n{LINE}\nbroken\n");
        let err = LogReader::new(text.as_bytes()).find_map(Result::err).unwrap();
        match err {
            ReadError::Parse(e) => assert_eq!(e.line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn text_field() -> impl Strategy<Value = String> {
        "[^\t\r\n]{0,24}"
    }

    fn record() -> impl Strategy<Value = LogRecord> {
        (
            0i64..4_000_000_000,
            -12i32..=14,
            prop_oneof![Just(String::new()), "[a-z0-9]{1,12}"],
            any::<IpAddr>(),
            text_field(),
            text_field(),
            prop_oneof![Just(Action::Download), Just(Action::AbstractView), Just(Action::Other)],
            "[A-Za-z0-9.&]{1,19}",
            prop_oneof![Just(Channel::Direct), Just(Channel::SearchEngine), Just(Channel::Unknown)],
        )
            .prop_map(|(secs, off_h, user, ip, hostname, user_agent, action, pub_id, channel)| {
                let offset = FixedOffset::east_opt(off_h * 3600).unwrap();
                let timestamp = DateTime::from_timestamp(secs, 0).unwrap().with_timezone(&offset);
                LogRecord {
                    timestamp,
                    user_id: UserId::from(user.as_str()),
                    ip,
                    hostname,
                    user_agent,
                    action,
                    pub_id,
                    channel,
                }
            })
    }

    proptest! {
        #[test]
        fn tsv_round_trip(rec in record()) {
            let line = rec.to_tsv();
            let back = parse_log_line(&line, 1).unwrap();
            prop_assert_eq!(back.timestamp.offset(), rec.timestamp.offset());
            prop_assert_eq!(back, rec);
        }
    }
}
