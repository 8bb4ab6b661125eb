//! Netpbm images through the `image` crate. 8-bit grayscale and RGB only;
//! output is always binary P5/P6.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::remap::Image;

const KIND: &str = "PNM";

pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)
        .map_err(|e| Error::format(KIND, e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(buf) => Image::new(w, h, 1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => Image::new(w, h, 3, buf.into_raw()),
        other => Err(Error::format(
            KIND,
            format!("only 8-bit grayscale or RGB is supported, got {:?}", other.color()),
        )),
    }
}

pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let (subtype, color) = match img.channels() {
        1 => (PnmSubtype::Graymap(SampleEncoding::Binary), ExtendedColorType::L8),
        _ => (PnmSubtype::Pixmap(SampleEncoding::Binary), ExtendedColorType::Rgb8),
    };
    let mut out = Vec::with_capacity(img.data().len() + 20);
    PnmEncoder::new(&mut out)
        .with_subtype(subtype)
        .write_image(img.data(), img.width() as u32, img.height() as u32, color)
        .expect("in-memory PNM encoding of a validated image");
    out
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pnm(&std::fs::read(path)?)
}

pub fn write_pnm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    Ok(std::fs::write(path, encode_pnm(img))?)
}
