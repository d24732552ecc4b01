//! Serial framing for capture vectors.
//!
//! ```text
//! +------+---+-------------+-----------------+-----+
//! | 0xAA | M | timestamp   | M readings      | XOR |
//! |  1   | 1 | 4 (LE, µs)  | 2 each (LE)     |  1  |
//! +------+---+-------------+-----------------+-----+
//! ```
//!
//! Readings use the low 10 bits; the upper 6 bits are zero. The trailing
//! byte is the XOR of every byte before it. The timestamp wraps at 2^32 µs;
//! [`TimestampUnwrapper`] rebuilds a monotonic clock on the receiving side.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SensorFrame, ADC_MAX};

pub const SYNC: u8 = 0xAA;
const HEADER_LEN: usize = 6;

/// Encoded size of a frame with `channels` readings.
pub const fn frame_len(channels: usize) -> usize {
    7 + 2 * channels
}

fn xor(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

pub fn encode(frame: &SensorFrame) -> Result<Vec<u8>> {
    let m = frame.channels.len();
    if m == 0 || m > usize::from(u8::MAX) {
        return Err(Error::Encoding(format!("channel count {m} outside 1..=255")));
    }
    let mut out = Vec::with_capacity(frame_len(m));
    out.push(SYNC);
    out.push(m as u8);
    out.extend_from_slice(&(frame.timestamp_us as u32).to_le_bytes());
    for (i, &r) in frame.channels.iter().enumerate() {
        if r > ADC_MAX {
            return Err(Error::Encoding(format!("channel {i} reading {r} exceeds {ADC_MAX}")));
        }
        out.extend_from_slice(&r.to_le_bytes());
    }
    out.push(xor(&out));
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub frames: u64,
    /// Candidate frames abandoned after a failed check.
    pub resyncs: u64,
    /// Bytes discarded while hunting for a sync byte or after a failed check.
    pub bytes_skipped: u64,
}

enum Parse {
    Frame(SensorFrame, usize),
    Incomplete,
    Invalid,
}

/// Incremental decoder. Feed bytes with [`push`](Decoder::push), then drain
/// frames with [`next_frame`](Decoder::next_frame); call
/// [`finish`](Decoder::finish) at end of stream.
#[derive(Debug, Default)]
pub struct Decoder {
    buf: Vec<u8>,
    pos: usize,
    expected_channels: Option<u8>,
    stats: DecoderStats,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Only accept frames with exactly `channels` readings.
    pub fn with_channels(channels: u8) -> Self {
        Self {
            expected_channels: Some(channels),
            ..Self::default()
        }
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.pos > 0 && self.pos * 2 >= self.buf.len() {
            self.buf.drain(..self.pos);
            self.pos = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    fn parse_at(&self, start: usize) -> Parse {
        let b = &self.buf[start..];
        if b.len() < 2 {
            return Parse::Incomplete;
        }
        let m = b[1];
        if m == 0 || self.expected_channels.is_some_and(|e| e != m) {
            return Parse::Invalid;
        }
        let len = frame_len(usize::from(m));
        if b.len() < len {
            return Parse::Incomplete;
        }
        let body = &b[..len];
        if xor(&body[..len - 1]) != body[len - 1] {
            return Parse::Invalid;
        }
        let ts = u32::from_le_bytes([body[2], body[3], body[4], body[5]]);
        let mut channels = Vec::with_capacity(usize::from(m));
        for pair in body[HEADER_LEN..len - 1].chunks_exact(2) {
            let r = u16::from_le_bytes([pair[0], pair[1]]);
            if r > ADC_MAX {
                return Parse::Invalid;
            }
            channels.push(r);
        }
        Parse::Frame(SensorFrame::new(u64::from(ts), channels), len)
    }

    fn skip(&mut self, n: usize) {
        self.pos += n;
        self.stats.bytes_skipped += n as u64;
    }

    fn scan(&mut self, at_end: bool) -> Option<SensorFrame> {
        loop {
            let rest = &self.buf[self.pos..];
            match rest.iter().position(|&b| b == SYNC) {
                None => {
                    let n = rest.len();
                    self.skip(n);
                    return None;
                }
                Some(off) => self.skip(off),
            }
            match self.parse_at(self.pos) {
                Parse::Frame(frame, len) => {
                    self.pos += len;
                    self.stats.frames += 1;
                    return Some(frame);
                }
                Parse::Incomplete if !at_end => return None,
                Parse::Incomplete | Parse::Invalid => {
                    self.stats.resyncs += 1;
                    self.skip(1);
                }
            }
        }
    }

    /// Next complete frame, or `None` if more bytes are needed.
    pub fn next_frame(&mut self) -> Option<SensorFrame> {
        self.scan(false)
    }

    /// Drains what is left, treating truncated candidates as corrupt.
    pub fn finish(&mut self) -> Vec<SensorFrame> {
        let mut out = Vec::new();
        while let Some(f) = self.scan(true) {
            out.push(f);
        }
        out
    }
}

/// Decodes a complete byte stream.
pub fn decode(stream: &[u8]) -> (Vec<SensorFrame>, DecoderStats) {
    let mut d = Decoder::new();
    d.push(stream);
    let frames = d.finish();
    (frames, d.stats())
}

/// Extends wrapping 32-bit timestamps into a monotonic 64-bit clock.
#[derive(Debug, Default, Clone)]
pub struct TimestampUnwrapper {
    last: Option<u32>,
    epoch: u64,
}

impl TimestampUnwrapper {
    pub fn unwrap(&mut self, raw: u32) -> u64 {
        if let Some(prev) = self.last {
            if raw < prev {
                self.epoch += 1 << 32;
            }
        }
        self.last = Some(raw);
        self.epoch + u64::from(raw)
    }
}

/// Noise injected by [`stress`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    /// Chance of a garbage run before each frame.
    pub garbage_prob: f64,
    /// Garbage runs are 1..=max bytes, never containing the sync byte.
    pub max_garbage: usize,
    /// Chance that one bit of a frame is flipped.
    pub corrupt_prob: f64,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            garbage_prob: 0.1,
            max_garbage: 16,
            corrupt_prob: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub frames_sent: usize,
    pub frames_corrupted: usize,
    pub garbage_bytes: usize,
    pub frames_decoded: usize,
    /// Intact frames that came back bit-exact, in order.
    pub frames_recovered: usize,
    /// Decoded frames that match no intact frame.
    pub misdecoded: usize,
    pub resyncs: u64,
    pub bytes_skipped: u64,
    pub stream_len: usize,
}

impl StressReport {
    pub fn clean(&self) -> bool {
        self.misdecoded == 0 && self.frames_recovered == self.frames_sent - self.frames_corrupted
    }
}

/// Encodes `frames` into one stream with garbage and bit flips, decodes it
/// and checks the result. Timestamps are compared after unwrapping.
pub fn stress(frames: &[SensorFrame], cfg: &StressConfig, rng: &mut impl Rng) -> Result<(StressReport, Vec<u8>)> {
    let mut stream = Vec::new();
    let mut expected = Vec::new();
    let (mut corrupted, mut garbage) = (0, 0);
    for f in frames {
        if rng.random_bool(cfg.garbage_prob) {
            let n = rng.random_range(1..=cfg.max_garbage.max(1));
            for _ in 0..n {
                let b: u8 = rng.random();
                stream.push(if b == SYNC { b ^ 1 } else { b });
            }
            garbage += n;
        }
        let mut bytes = encode(f)?;
        if rng.random_bool(cfg.corrupt_prob) {
            let bit = rng.random_range(0..bytes.len() * 8);
            bytes[bit / 8] ^= 1 << (bit % 8);
            corrupted += 1;
        } else {
            expected.push(f);
        }
        stream.extend_from_slice(&bytes);
    }
    let channels = frames.first().map_or(0, |f| f.channels.len());
    let mut d = if channels > 0 && channels <= 255 {
        Decoder::with_channels(channels as u8)
    } else {
        Decoder::new()
    };
    d.push(&stream);
    let mut clock = TimestampUnwrapper::default();
    let decoded: Vec<SensorFrame> = d
        .finish()
        .into_iter()
        .map(|mut f| {
            f.timestamp_us = clock.unwrap(f.timestamp_us as u32);
            f
        })
        .collect();
    let mut recovered = 0;
    let mut misdecoded = 0;
    let mut next = 0;
    for f in &decoded {
        match expected[next..].iter().position(|e| *e == f) {
            Some(i) => {
                recovered += 1;
                next += i + 1;
            }
            None => misdecoded += 1,
        }
    }
    let stats = d.stats();
    Ok((
        StressReport {
            frames_sent: frames.len(),
            frames_corrupted: corrupted,
            garbage_bytes: garbage,
            frames_decoded: decoded.len(),
            frames_recovered: recovered,
            misdecoded,
            resyncs: stats.resyncs,
            bytes_skipped: stats.bytes_skipped,
            stream_len: stream.len(),
        },
        stream,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn golden_single_channel() {
        let bytes = encode(&SensorFrame::new(0, vec![0])).unwrap();
        assert_eq!(bytes, [0xAA, 0x01, 0, 0, 0, 0, 0, 0, 0xAB]);
    }

    #[test]
    fn twelve_channel_length() {
        let f = SensorFrame::new(123_456, (0..12).map(|i| i * 80).collect());
        assert_eq!(encode(&f).unwrap().len(), 31);
    }

    #[test]
    fn encoding_errors() {
        assert!(encode(&SensorFrame::new(0, vec![1024])).is_err());
        assert!(encode(&SensorFrame::new(0, vec![])).is_err());
        assert!(encode(&SensorFrame::new(0, vec![0; 256])).is_err());
    }

    #[test]
    fn garbage_prefix_is_skipped() {
        let f = SensorFrame::new(99, vec![1, 2, 3, 1023]);
        let mut stream = vec![0x01, 0x55, 0xFE];
        stream.extend(encode(&f).unwrap());
        let (frames, stats) = decode(&stream);
        assert_eq!(frames, vec![f]);
        assert_eq!(stats.bytes_skipped, 3);
    }

    #[test]
    fn flipped_bit_is_rejected() {
        let a = SensorFrame::new(1, vec![10, 20, 30, 40]);
        let b = SensorFrame::new(2, vec![11, 21, 31, 41]);
        let mut bad = encode(&a).unwrap();
        bad[8] ^= 0x04;
        let mut stream = bad;
        stream.extend(encode(&b).unwrap());
        let (frames, stats) = decode(&stream);
        assert_eq!(frames, vec![b]);
        assert!(stats.resyncs >= 1);
    }

    #[test]
    fn empty_stream() {
        let (frames, stats) = decode(&[]);
        assert!(frames.is_empty());
        assert_eq!(stats, DecoderStats::default());
    }

    #[test]
    fn incremental_push_matches_batch() {
        let frames: Vec<_> = (0..5)
            .map(|i| SensorFrame::new(i * 10_000, vec![i as u16; 6]))
            .collect();
        let stream: Vec<u8> = frames.iter().flat_map(|f| encode(f).unwrap()).collect();
        let mut d = Decoder::with_channels(6);
        let mut got = Vec::new();
        for chunk in stream.chunks(3) {
            d.push(chunk);
            while let Some(f) = d.next_frame() {
                got.push(f);
            }
        }
        got.extend(d.finish());
        assert_eq!(got, frames);
    }

    #[test]
    fn expected_channel_count_filters() {
        let f = SensorFrame::new(5, vec![7; 4]);
        let mut d = Decoder::with_channels(5);
        d.push(&encode(&f).unwrap());
        assert!(d.finish().is_empty());
    }

    #[test]
    fn timestamps_unwrap() {
        let mut u = TimestampUnwrapper::default();
        assert_eq!(u.unwrap(u32::MAX - 5), u64::from(u32::MAX - 5));
        assert_eq!(u.unwrap(3), (1u64 << 32) + 3);
        assert_eq!(u.unwrap(10), (1u64 << 32) + 10);
    }

    proptest! {
        #[test]
        fn round_trip(ts in 0u64..(1 << 32), readings in proptest::collection::vec(0u16..=1023, 1..40)) {
            let f = SensorFrame::new(ts, readings);
            let (frames, stats) = decode(&encode(&f).unwrap());
            prop_assert_eq!(frames, vec![f]);
            prop_assert_eq!(stats.resyncs, 0);
        }

        #[test]
        fn recovers_frames_between_garbage(
            frames in proptest::collection::vec(
                (0u64..(1 << 32), proptest::collection::vec(0u16..=1023, 4..13)), 1..20),
            garbage in proptest::collection::vec(proptest::collection::vec(0u8..0xAA, 0..8), 21),
        ) {
            let frames: Vec<_> = frames.into_iter().map(|(t, r)| SensorFrame::new(t, r)).collect();
            let mut stream = Vec::new();
            for (f, g) in frames.iter().zip(&garbage) {
                stream.extend(g);
                stream.extend(encode(f).unwrap());
            }
            stream.extend(&garbage[20]);
            let (got, _) = decode(&stream);
            prop_assert_eq!(got, frames);
        }
    }

    #[test]
    fn stress_recovers_intact_frames() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let frames: Vec<SensorFrame> = (0..2000)
            .map(|i| SensorFrame::new(i * 9600, (0..12).map(|c| ((i * 7 + c * 31) % 1024) as u16).collect()))
            .collect();
        let (r, stream) = stress(&frames, &StressConfig::default(), &mut rng).unwrap();
        assert!(r.frames_corrupted > 0 && r.garbage_bytes > 0);
        assert!(r.clean(), "{r:?}");
        assert_eq!(r.stream_len, stream.len());
    }
}
