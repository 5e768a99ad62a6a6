//! Tick-label grammar.
//!
//! Numbers: optional sign (ASCII or U+2212), digits with optional comma
//! thousands groups, optional decimals, optional `%` (÷100), `k` (×1e3) or
//! `M` (×1e6) suffix. Dates: `YYYY`, `YYYY-MM`, `YYYY-MM-DD`, `Mon YYYY`.

use chrono::NaiveDate;

/// Parse a numeric tick label. Returns `None` for anything outside the
/// grammar.
pub fn parse_numeric_label(label: &str) -> Option<f64> {
    let s = label.trim();
    let (sign, s) = match s.chars().next()? {
        '-' | '\u{2212}' => (-1.0, &s[s.chars().next()?.len_utf8()..]),
        '+' => (1.0, &s[1..]),
        _ => (1.0, s),
    };
    let (body, factor) = if let Some(b) = s.strip_suffix('%') {
        (b, 0.01)
    } else if let Some(b) = s.strip_suffix('k') {
        (b, 1e3)
    } else if let Some(b) = s.strip_suffix('M') {
        (b, 1e6)
    } else {
        (s, 1.0)
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    if int_part.is_empty() && frac_part.is_none_or(str::is_empty) {
        return None;
    }
    let digits = strip_thousands(int_part)?;
    let mut text = digits;
    if let Some(f) = frac_part {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        text.push('.');
        text.push_str(f);
    }
    if text.starts_with('.') {
        text.insert(0, '0');
    }
    let v: f64 = text.parse().ok()?;
    Some(sign * v * factor)
}

fn strip_thousands(int_part: &str) -> Option<String> {
    if int_part.is_empty() {
        return Some(String::new());
    }
    if !int_part.contains(',') {
        return int_part
            .bytes()
            .all(|b| b.is_ascii_digit())
            .then(|| int_part.to_string());
    }
    let mut groups = int_part.split(',');
    let head = groups.next()?;
    if head.is_empty() || head.len() > 3 || !head.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut out = head.to_string();
    for g in groups {
        if g.len() != 3 || !g.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        out.push_str(g);
    }
    Some(out)
}

const MONTHS: [&str; 12] = [
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

/// Parse a date label into epoch milliseconds (UTC midnight).
pub fn parse_date_label(label: &str) -> Option<f64> {
    let s = label.trim();
    let date = if let Some((mon, year)) = s.split_once(' ') {
        let mon = mon.trim().to_ascii_lowercase();
        let month = MONTHS
            .iter()
            .position(|m| mon.len() >= 3 && m.starts_with(&mon[..3]) && full_month_ok(&mon))?
            + 1;
        NaiveDate::from_ymd_opt(parse_year(year.trim())?, month as u32, 1)?
    } else {
        let parts: Vec<&str> = s.split('-').collect();
        match parts.as_slice() {
            [y] => NaiveDate::from_ymd_opt(parse_year(y)?, 1, 1)?,
            [y, m] => NaiveDate::from_ymd_opt(parse_year(y)?, parse_fixed(m, 2)?, 1)?,
            [y, m, d] => {
                NaiveDate::from_ymd_opt(parse_year(y)?, parse_fixed(m, 2)?, parse_fixed(d, 2)?)?
            }
            _ => return None,
        }
    };
    Some(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis() as f64)
}

fn full_month_ok(mon: &str) -> bool {
    const FULL: [&str; 12] = [
        "january",
        "february",
        "march",
        "april",
        "may",
        "june",
        "july",
        "august",
        "september",
        "october",
        "november",
        "december",
    ];
    mon.len() == 3 || FULL.contains(&mon) || mon == "sept"
}

fn parse_year(s: &str) -> Option<i32> {
    parse_fixed(s, 4).map(|y| y as i32)
}

fn parse_fixed(s: &str, len: usize) -> Option<u32> {
    (s.len() == len && s.bytes().all(|b| b.is_ascii_digit()))
        .then(|| s.parse().ok())
        .flatten()
}
