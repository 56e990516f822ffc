//! Canonical feature names, in output column order, and their dictionary.

pub const FEATURE_COUNT: usize = 89;

/// Index of the first peak-point feature; everything from here on
/// (`Upayc` .. `BRPPSW_Q3`) derives from payload or byte-rate peaks.
pub const PEAK_FEATURES_START: usize = 64;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    // inter-arrival time
    "UIAT_mean", "UIAT_min", "UIAT_max", "UIAT_std",
    "DIAT_mean", "DIAT_min", "DIAT_max", "DIAT_std",
    "IAT_mean", "IAT_min", "IAT_max", "IAT_std",
    // TCP window
    "UWindow_sum", "UWindow_mean", "UWindow_min", "UWindow_max", "UWindow_std",
    "DWindow_sum", "DWindow_mean", "DWindow_min", "DWindow_max", "DWindow_std",
    "Window_sum", "Window_mean", "Window_min", "Window_max", "Window_std",
    // packet numbers
    "Upnum", "Dpnum", "pnum", "Upnum_s", "Dpnum_s", "pnum_s", "UDpnum_s",
    // TCP flags
    "FIN_cnt", "SYN_cnt", "PSH_cnt", "ACK_cnt", "RST_cnt", "URG_cnt", "ECE_cnt", "CWR_cnt",
    "UPSH_cnt", "UURG_cnt", "DPSH_cnt", "DURG_cnt",
    // headers
    "Uhdr", "Dhdr", "hdr", "UhdrR", "DhdrR", "hdrR",
    // payload
    "Upay_mean", "Upay_min", "Upay_max", "Upay_std",
    "Dpay_mean", "Dpay_min", "Dpay_max", "Dpay_std",
    "pay_mean", "pay_min", "pay_max", "pay_std",
    // payload peak points
    "Upayc", "Dpayc", "payc",
    "PPP5_mean", "PPP5_min", "PPP5_max", "PPP5_std",
    // byte-rate peak points
    "UBRPP", "DBRPP", "BRPP",
    // byte-rate peak points over sliding windows
    "UBRPPSW_mean", "UBRPPSW_min", "UBRPPSW_max", "UBRPPSW_std",
    "DBRPPSW_mean", "DBRPPSW_min", "DBRPPSW_max", "DBRPPSW_std",
    "BRPPSW_mean", "BRPPSW_min", "BRPPSW_max", "BRPPSW_std",
    "BRPPSW_Q1", "BRPPSW_Q2", "BRPPSW_Q3",
];

/// Names of the 25 peak-point features.
pub fn peak_feature_names() -> &'static [&'static str] {
    &FEATURE_NAMES[PEAK_FEATURES_START..]
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

fn direction(prefix: &str) -> &'static str {
    match prefix {
        "U" => "upstream",
        "D" => "downstream",
        _ => "all packets",
    }
}

fn stat(s: &str) -> &'static str {
    match s {
        "mean" => "Mean",
        "min" => "Minimum",
        "max" => "Maximum",
        "std" => "Population std",
        "sum" => "Sum",
        _ => "",
    }
}

/// Direction prefix of `head` relative to `stem` ("" for all packets).
fn prefix_of<'a>(head: &'a str, stem: &str) -> &'a str {
    head.strip_suffix(stem).unwrap_or("")
}

/// Human-readable description of one canonical feature.
pub fn describe(name: &str) -> Option<String> {
    feature_index(name)?;
    let (head, tail) = name.rsplit_once('_').unwrap_or((name, ""));
    let d = |stem: &str| direction(prefix_of(head, stem));
    let text = match head {
        "UIAT" | "DIAT" | "IAT" => format!(
            "{} of {} packet inter-arrival times (s), zero-payload packets included",
            stat(tail),
            d("IAT")
        ),
        "UWindow" | "DWindow" | "Window" => format!(
            "{} of {} TCP receive window sizes (0 for UDP)",
            stat(tail),
            d("Window")
        ),
        "Upay" | "Dpay" | "pay" => format!(
            "{} of {} payload sizes (bytes)",
            stat(tail),
            d("pay")
        ),
        "PPP5" => format!(
            "{} of the payload-peak counters taken every alpha s (default 5) over the first beta s (default 60) of the flow, all packets",
            stat(tail)
        ),
        "UBRPPSW" | "DBRPPSW" | "BRPPSW" if tail.starts_with('Q') => format!(
            "Quartile {} (linear interpolation) of all-packets sliding-window byte peaks",
            &tail[1..]
        ),
        "UBRPPSW" | "DBRPPSW" | "BRPPSW" => format!(
            "{} of {} sliding-window byte-sum peaks; window L s (default 3), step Z*L s (default Z 0.5), packet size = payload + header",
            stat(tail),
            d("BRPPSW")
        ),
        _ => match name {
            "Upnum" | "Dpnum" | "pnum" => format!("Number of {} packets", d("pnum")),
            "Upnum_s" | "Dpnum_s" | "pnum_s" => format!(
                "Packets per second, {} (0 when the flow duration is 0)",
                direction(&name[..name.len() - "pnum_s".len()])
            ),
            "UDpnum_s" => "Ratio of downstream to upstream packet counts (0 without upstream packets)".into(),
            "UPSH_cnt" | "UURG_cnt" | "DPSH_cnt" | "DURG_cnt" => format!(
                "Count of {} packets with the {} flag",
                direction(&name[..1]),
                &name[1..4]
            ),
            n if n.ends_with("_cnt") => format!("Count of packets with the {} flag set", &n[..3]),
            "Uhdr" | "Dhdr" | "hdr" => format!(
                "Sum of network + transport header lengths, {}",
                d("hdr")
            ),
            "UhdrR" | "DhdrR" | "hdrR" => format!(
                "Header length sum over payload sum, {} (0 when no payload)",
                d("hdrR")
            ),
            "Upayc" | "Dpayc" | "payc" => format!(
                "Payload peak points over the whole flow, {}; peaks use >= on both neighbours over non-zero-payload packets",
                d("payc")
            ),
            "UBRPP" | "DBRPP" | "BRPP" => format!(
                "Peaks of the byte rate over complete T-second buckets (default T 1), {}",
                d("BRPP")
            ),
            _ => return None,
        },
    };
    Some(text)
}

/// Tab-separated `name<TAB>description` document covering every feature.
pub fn feature_dictionary() -> String {
    let mut out = String::from(
        "# feature\tdescription\n# Degenerate statistics (empty sets, zero denominators) are reported as 0.\n",
    );
    for name in FEATURE_NAMES {
        out.push_str(name);
        out.push('\t');
        out.push_str(&describe(name).expect("every canonical name has a description"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn census() {
        assert_eq!(FEATURE_NAMES.len(), 89);
        let unique: HashSet<_> = FEATURE_NAMES.iter().collect();
        assert_eq!(unique.len(), 89);
        assert_eq!(peak_feature_names().len(), 25);
        assert_eq!(peak_feature_names()[0], "Upayc");
        assert_eq!(FEATURE_NAMES[PEAK_FEATURES_START - 1], "pay_std");
    }

    #[test]
    fn every_name_described() {
        for n in FEATURE_NAMES {
            let d = describe(n).unwrap();
            assert!(!d.is_empty());
        }
        assert!(describe("bogus").is_none());
        assert_eq!(describe("DIAT_max").unwrap().split(" of ").nth(1), Some("downstream packet inter-arrival times (s), zero-payload packets included"));
        assert!(describe("UPSH_cnt").unwrap().contains("upstream packets with the PSH"));
        assert!(describe("Dpnum_s").unwrap().contains("downstream"));
        let dict = feature_dictionary();
        assert_eq!(dict.lines().filter(|l| !l.starts_with('#')).count(), 89);
    }
}
