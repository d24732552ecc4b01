//! Frames through the serial format, fed to the decoder in small chunks the
//! way a serial port delivers them, with a corrupted frame in the middle.
//!
//! ```text
//! cargo run --example wire_stream
//! ```

use ledgaze::wire::{encode, Decoder, TimestampUnwrapper};
use ledgaze::SensorFrame;

fn main() -> ledgaze::Result<()> {
    // Start just before the 32-bit microsecond counter wraps.
    let start = u64::from(u32::MAX) - 20_000;
    let frames: Vec<SensorFrame> = (0..6)
        .map(|i| SensorFrame::new(start + i * 9600, (0..12).map(|c| (100 + 50 * c + i) as u16).collect()))
        .collect();

    let mut stream = vec![0x13, 0x37];
    for (i, f) in frames.iter().enumerate() {
        let mut bytes = encode(f)?;
        if i == 3 {
            bytes[10] ^= 0x04;
        }
        stream.extend(bytes);
    }

    let mut decoder = Decoder::with_channels(12);
    let mut clock = TimestampUnwrapper::default();
    for chunk in stream.chunks(7) {
        decoder.push(chunk);
        while let Some(f) = decoder.next_frame() {
            let t = clock.unwrap(f.timestamp_us as u32);
            println!("t = {t} us  ch0 = {}", f.channels[0]);
        }
    }
    decoder.finish();
    println!("{:?}", decoder.stats());
    Ok(())
}
