use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::{Duration, Instant};

use super::{decode_sample, PhysicalError, TelemetrySample};
use crate::Nanos;

/// Pacing of a trace replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplaySpeed {
    /// No pacing at all.
    Max,
    /// Wall-clock pacing scaled by this factor (2.0 replays twice as fast).
    Factor(f64),
}

/// Iterator over the samples of a trace file, in file order.
pub struct TraceReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    speed: ReplaySpeed,
    origin: Option<(Nanos, Instant)>,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(reader: R, speed: ReplaySpeed) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            speed,
            origin: None,
        }
    }

    fn pace(&mut self, ts: Nanos) {
        let ReplaySpeed::Factor(factor) = self.speed else {
            return;
        };
        if factor <= 0.0 || !factor.is_finite() {
            return;
        }
        let (t0, start) = *self.origin.get_or_insert((ts, Instant::now()));
        let offset = (ts - t0).max(0) as f64 / factor;
        let due = start + Duration::from_nanos(offset as u64);
        let now = Instant::now();
        if due > now {
            std::thread::sleep(due - now);
        }
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TelemetrySample, PhysicalError>;

    fn next(&mut self) -> Option<Self::Item> {
        let line = self.lines.next()?;
        self.line_no += 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        let sample = decode_sample(&line).map_err(|e| match e {
            PhysicalError::MalformedLine { reason, .. } => PhysicalError::MalformedLine {
                line: Some(self.line_no),
                reason,
            },
            other => other,
        });
        if let Ok(s) = &sample {
            self.pace(s.ts);
        }
        Some(sample)
    }
}

/// Opens a trace file of [`encode_sample`](super::encode_sample) lines.
pub fn replay_trace(
    path: impl AsRef<Path>,
    speed: ReplaySpeed,
) -> Result<TraceReader<BufReader<File>>, PhysicalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PhysicalError::FileNotFound(path.to_path_buf()),
        _ => PhysicalError::Io(e),
    })?;
    Ok(TraceReader::new(BufReader::new(file), speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical::{encode_sample, Channel};
    use std::io::Write;

    fn lines(n: usize) -> Vec<String> {
        (0..n)
            .map(|i| {
                encode_sample(&TelemetrySample::new(
                    "m",
                    Channel::AccelX,
                    i as i64,
                    i as f64,
                ))
            })
            .collect()
    }

    #[test]
    fn yields_in_file_order() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines(3) {
            writeln!(f, "{l}").unwrap();
        }
        let got: Vec<_> = replay_trace(f.path(), ReplaySpeed::Max)
            .unwrap()
            .map(Result::unwrap)
            .collect();
        assert_eq!(got.len(), 3);
        assert!(got.iter().enumerate().all(|(i, s)| s.ts == i as i64));
    }

    #[test]
    fn reports_malformed_line_number() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let l = lines(3);
        writeln!(f, "{}\n{{broken\n{}", l[0], l[2]).unwrap();
        let results: Vec<_> = replay_trace(f.path(), ReplaySpeed::Max).unwrap().collect();
        assert!(results[0].is_ok());
        match &results[1] {
            Err(PhysicalError::MalformedLine { line: Some(2), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(results[1]
            .as_ref()
            .unwrap_err()
            .to_string()
            .contains("line 2"));
    }

    #[test]
    fn empty_file_is_empty_stream() {
        let f = tempfile::NamedTempFile::new().unwrap();
        assert_eq!(replay_trace(f.path(), ReplaySpeed::Max).unwrap().count(), 0);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            replay_trace("/nonexistent/trace.jsonl", ReplaySpeed::Max),
            Err(PhysicalError::FileNotFound(_))
        ));
    }

    #[test]
    fn factor_pacing_respects_timestamps() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for i in 0..3i64 {
            let s = TelemetrySample::new("m", Channel::AccelX, i * 10_000_000, 0.0);
            writeln!(f, "{}", encode_sample(&s)).unwrap();
        }
        let start = Instant::now();
        let n = replay_trace(f.path(), ReplaySpeed::Factor(1.0))
            .unwrap()
            .count();
        assert_eq!(n, 3);
        assert!(start.elapsed() >= Duration::from_millis(20));
    }
}
