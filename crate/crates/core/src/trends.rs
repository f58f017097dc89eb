//! Emotion trends over time: fixed-length windows and fixed-count bins.

use std::sync::Arc;

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelVector, Taxonomy};
use crate::table::render_csv;

/// Default window anchor, midnight UTC on 1 March 2020.
pub fn default_origin() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap()
}

pub const DEFAULT_WINDOW_DAYS: i64 = 7;
pub const DEFAULT_BIN_SIZE: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTweet {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub labels: LabelVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendWindow {
    pub start: DateTime<Utc>,
    /// Exclusive.
    pub end: DateTime<Utc>,
    pub n: u64,
    /// Tweets carrying each label.
    pub counts: Vec<u64>,
}

impl TrendWindow {
    /// Share of tweets carrying each label; `None` for an empty window.
    pub fn shares(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .map(|&c| (self.n > 0).then(|| c as f64 / self.n as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSeries {
    pub taxonomy: Arc<Taxonomy>,
    pub windows: Vec<TrendWindow>,
    /// Tweets dated before the origin, left out of every window.
    pub before_origin: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub index: usize,
    /// Position of the bin's first tweet in chronological order.
    pub start_index: usize,
    pub n: u64,
    pub counts: Vec<u64>,
    pub first_at: DateTime<Utc>,
    pub last_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinSeries {
    pub taxonomy: Arc<Taxonomy>,
    pub bin_size: usize,
    pub bins: Vec<Bin>,
}

fn common_taxonomy(tweets: &[LabeledTweet]) -> Result<Option<Arc<Taxonomy>>> {
    let Some(first) = tweets.first() else {
        return Ok(None);
    };
    let t = first.labels.taxonomy();
    for tw in tweets {
        if tw.labels.taxonomy() != t {
            return Err(Error::Config(format!(
                "tweet {} uses taxonomy {} but the corpus uses {}",
                tw.id,
                tw.labels.taxonomy().name(),
                t.name()
            )));
        }
    }
    Ok(Some(t.clone()))
}

fn add_bits(counts: &mut [u64], bits: &[bool]) {
    for (c, &b) in counts.iter_mut().zip(bits) {
        *c += u64::from(b);
    }
}

/// Consecutive windows `[origin + k·window, origin + (k+1)·window)` from the
/// origin up to the window holding the latest tweet. Windows without tweets
/// are kept with `n = 0`. Tweets before `origin` are counted separately.
pub fn weekly_distribution(
    tweets: &[LabeledTweet],
    taxonomy: &Arc<Taxonomy>,
    window: Duration,
    origin: DateTime<Utc>,
) -> Result<TrendSeries> {
    if window <= Duration::zero() {
        return Err(Error::Config("trend window must be positive".into()));
    }
    if let Some(t) = common_taxonomy(tweets)? {
        if t != *taxonomy {
            return Err(Error::Config(format!(
                "tweets use taxonomy {} but trends were requested over {}",
                t.name(),
                taxonomy.name()
            )));
        }
    }
    let step = window.num_seconds();
    if step <= 0 {
        return Err(Error::Config("trend window must be at least one second".into()));
    }
    let labels = taxonomy.len();
    let mut windows: Vec<TrendWindow> = Vec::new();
    let mut before_origin = 0;
    for tw in tweets {
        let offset = (tw.created_at - origin).num_seconds();
        if tw.created_at < origin {
            before_origin += 1;
            continue;
        }
        let k = (offset / step) as usize;
        while windows.len() <= k {
            let start = origin + Duration::seconds(step * windows.len() as i64);
            windows.push(TrendWindow {
                start,
                end: start + Duration::seconds(step),
                n: 0,
                counts: vec![0; labels],
            });
        }
        windows[k].n += 1;
        add_bits(&mut windows[k].counts, tw.labels.bits());
    }
    if before_origin > 0 {
        log::warn!("{before_origin} tweets precede the trend origin {origin} and were left out");
    }
    Ok(TrendSeries {
        taxonomy: taxonomy.clone(),
        windows,
        before_origin,
    })
}

/// Chronological chunks of exactly `bin_size` tweets, ordered by
/// `(created_at, id)`; the final chunk may be smaller.
pub fn fixed_count_bins(tweets: &[LabeledTweet], taxonomy: &Arc<Taxonomy>, bin_size: usize) -> Result<BinSeries> {
    if bin_size == 0 {
        return Err(Error::Config("bin size must be at least 1".into()));
    }
    if let Some(t) = common_taxonomy(tweets)? {
        if t != *taxonomy {
            return Err(Error::Config(format!(
                "tweets use taxonomy {} but bins were requested over {}",
                t.name(),
                taxonomy.name()
            )));
        }
    }
    let mut order: Vec<&LabeledTweet> = tweets.iter().collect();
    order.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
    let bins = order
        .chunks(bin_size)
        .enumerate()
        .map(|(index, chunk)| {
            let mut counts = vec![0; taxonomy.len()];
            for tw in chunk {
                add_bits(&mut counts, tw.labels.bits());
            }
            Bin {
                index,
                start_index: index * bin_size,
                n: chunk.len() as u64,
                counts,
                first_at: chunk[0].created_at,
                last_at: chunk[chunk.len() - 1].created_at,
            }
        })
        .collect();
    Ok(BinSeries {
        taxonomy: taxonomy.clone(),
        bin_size,
        bins,
    })
}

pub(crate) fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl TrendSeries {
    /// `window_start,window_end,n,<share per label>`; empty windows leave the
    /// share cells blank.
    pub fn to_csv(&self) -> Result<String> {
        let header = ["window_start", "window_end", "n"]
            .into_iter()
            .map(String::from)
            .chain(self.taxonomy.labels().iter().cloned());
        let rows = self.windows.iter().map(|w| {
            let mut row = vec![timestamp(&w.start), timestamp(&w.end), w.n.to_string()];
            row.extend(w.shares().into_iter().map(|s| s.map(|v| v.to_string()).unwrap_or_default()));
            row
        });
        render_csv(header, rows)
    }
}

impl BinSeries {
    /// `bin_index,n,<count per label>`.
    pub fn to_csv(&self) -> Result<String> {
        let header = ["bin_index", "n"]
            .into_iter()
            .map(String::from)
            .chain(self.taxonomy.labels().iter().cloned());
        let rows = self.bins.iter().map(|b| {
            let mut row = vec![b.index.to_string(), b.n.to_string()];
            row.extend(b.counts.iter().map(u64::to_string));
            row
        });
        render_csv(header, rows)
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.bins.iter().map(|b| b.n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tax() -> Arc<Taxonomy> {
        Arc::new(Taxonomy::from_labels("toy", &["annoyed", "sad"]).unwrap())
    }

    fn tweet(id: &str, day: i64, bits: [bool; 2]) -> LabeledTweet {
        LabeledTweet {
            id: id.into(),
            created_at: default_origin() + Duration::hours(day * 24 + 1),
            labels: LabelVector::new(tax(), bits.to_vec()).unwrap(),
        }
    }

    #[test]
    fn shares_in_one_window() {
        let ts = [
            tweet("1", 0, [true, false]),
            tweet("2", 1, [true, true]),
            tweet("3", 6, [false, false]),
        ];
        let s = weekly_distribution(&ts, &tax(), Duration::days(7), default_origin()).unwrap();
        assert_eq!(s.windows.len(), 1);
        assert_eq!(s.windows[0].shares(), [Some(2.0 / 3.0), Some(1.0 / 3.0)]);
    }

    #[test]
    fn gap_weeks_are_emitted_empty() {
        let ts = [tweet("1", 0, [true, false]), tweet("2", 15, [false, true])];
        let s = weekly_distribution(&ts, &tax(), Duration::days(7), default_origin()).unwrap();
        assert_eq!(s.windows.iter().map(|w| w.n).collect::<Vec<_>>(), [1, 0, 1]);
        assert_eq!(s.windows[1].shares(), [None, None]);
        let csv = s.to_csv().unwrap();
        assert_eq!(csv.lines().nth(2).unwrap(), "2020-03-08T00:00:00Z,2020-03-15T00:00:00Z,0,,");
    }

    #[test]
    fn early_tweets_are_counted_not_binned() {
        let ts = [tweet("0", -3, [true, true]), tweet("1", 0, [true, false])];
        let s = weekly_distribution(&ts, &tax(), Duration::days(7), default_origin()).unwrap();
        assert_eq!(s.before_origin, 1);
        assert_eq!(s.windows[0].n, 1);
    }

    #[test]
    fn bins_keep_the_partial_tail() {
        let ts: Vec<_> = (0..7).map(|i| tweet(&i.to_string(), i, [i % 2 == 0, false])).collect();
        let b = fixed_count_bins(&ts, &tax(), 3).unwrap();
        assert_eq!(b.sizes(), [3, 3, 1]);
        assert_eq!(b.bins[0].counts, [2, 0]);
        assert!(fixed_count_bins(&ts, &tax(), 0).is_err());
        assert_eq!(fixed_count_bins(&ts, &tax(), 100).unwrap().sizes(), [7]);
    }

    #[test]
    fn equal_timestamps_order_by_id() {
        let mut a = tweet("b", 0, [true, false]);
        let b = tweet("a", 0, [false, true]);
        a.created_at = b.created_at;
        let bins = fixed_count_bins(&[a, b], &tax(), 1).unwrap();
        assert_eq!(bins.bins[0].counts, [0, 1]);
    }
}
