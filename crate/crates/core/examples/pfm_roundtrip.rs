//! Writes a depth map with holes to PFM, reads it back, and shows the
//! byte layout of a one-pixel file.
//!
//! `cargo run --example pfm_roundtrip`

use adaptive_dsr::storage::{decode_pfm, encode_pfm, read_pfm, write_pfm};
use adaptive_dsr::DepthField;

fn main() -> anyhow::Result<()> {
    let values: Vec<f64> = (0..12)
        .map(|i| {
            if i % 5 == 2 {
                f64::NAN
            } else {
                1.0 + 0.25 * i as f64
            }
        })
        .collect();
    let field = DepthField::from_values(4, 3, values)?;
    let dir = std::env::temp_dir().join("adsr_pfm_demo");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("depth.pfm");
    write_pfm(&path, &field)?;
    let back = read_pfm(&path)?;
    println!(
        "wrote {} ({} bytes), {} of {} pixels valid",
        path.display(),
        std::fs::metadata(&path)?.len(),
        back.valid_count(),
        back.len()
    );
    println!(
        "round trip identical: {}",
        back.valid() == field.valid()
            && (0..field.len()).all(|i| !field.valid()[i] || back.values()[i] == field.values()[i])
    );

    let one = encode_pfm(&DepthField::constant(1, 1, 2.5)?);
    println!("1x1 file of 2.5: {} bytes", one.len());
    println!(
        "  header  {:?}",
        String::from_utf8_lossy(&one[..one.len() - 4])
    );
    println!("  payload {:02x?}", &one[one.len() - 4..]);
    assert_eq!(decode_pfm(&one)?.get(0, 0), 2.5);
    Ok(())
}
