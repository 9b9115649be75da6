//! Encodes, serializes, parses and decodes a clip, then corrupts one byte of
//! a payload and shows it being rejected.
//!
//! cargo run --release --example roundtrip

use texlab::codec::bitstream::Bitstream;
use texlab::codec::{decode_sequence, encode_with_masks, CodingConfig, EncodeParams};
use texlab::synthetic::PanFixture;

fn main() -> texlab::error::Result<()> {
    let clip = PanFixture { frames: 9, ..PanFixture::default() }.clip()?;
    let params = EncodeParams { config: CodingConfig::Baseline, qp: 32, ..EncodeParams::default() };
    let enc = encode_with_masks(&clip.frames, None, &params)?;
    let dec = decode_sequence(&enc.bytes)?;
    println!(
        "{} bytes, {} frames, identical to encoder: {}, checksums ok: {}",
        enc.bytes.len(),
        dec.frames.len(),
        dec.frames == enc.recon,
        dec.all_crc_ok()
    );

    let stream = Bitstream::parse(&enc.bytes)?;
    let target = &stream.frames[2];
    let mut bytes = enc.bytes.clone();
    bytes[target.payload_offset + target.payload.len() / 2] ^= 0x40;
    match decode_sequence(&bytes) {
        Ok(d) => {
            let bad: Vec<usize> = (0..d.crc_ok.len()).filter(|&i| !d.crc_ok[i]).collect();
            println!("after corrupting frame {}: mismatching frames {bad:?}", target.display_index);
        }
        Err(e) => println!("after corruption: {e}"),
    }
    match decode_sequence(&enc.bytes[..enc.bytes.len() - 3]) {
        Ok(_) => println!("truncated stream decoded"),
        Err(e) => println!("truncated: {e}"),
    }
    Ok(())
}
