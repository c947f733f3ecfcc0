//! Binary PPM (P6) images and the `<root>/<class>/*.ppm` dataset layout.

use std::fs;
use std::path::{Path, PathBuf};

use super::data::{stratified_split, Dataset};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Split seed used for every directory-loaded dataset.
pub const DIRECTORY_SPLIT_SEED: u64 = 0x50_11_5e_ed;

/// A decoded 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// `width·height·3` samples, row-major.
    pub pixels: Vec<u8>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                format!("header truncated before {what}")
            } else {
                format!("expected {what}, found byte 0x{:02x}", self.bytes[self.pos])
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| format!("{what} is too large"))
    }
}

/// Parses a P6 file. `path` only labels errors.
pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    let fail = |message: String| Error::Parse { path: path.to_path_buf(), message };
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(fail(format!("bad magic `{found}`, expected `P6`")));
    }
    let mut h = Header { bytes, pos: 2 };
    if h.pos < bytes.len() && !bytes[h.pos].is_ascii_whitespace() && bytes[h.pos] != b'#' {
        return Err(fail("bad magic, expected `P6` followed by whitespace".into()));
    }
    let width = h.number("width").map_err(fail)?;
    let height = h.number("height").map_err(fail)?;
    let maxval = h.number("maxval").map_err(fail)?;
    if width == 0 || height == 0 {
        return Err(fail(format!("zero-sized image {width}×{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(fail(format!("unsupported maxval {maxval} (need 1..=255)")));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(fail("missing whitespace after maxval".into())),
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| fail("image dimensions overflow".into()))?;
    let data = &bytes[h.pos..];
    if data.len() < expected {
        return Err(fail(format!("truncated pixel data: expected {expected} bytes, found {}", data.len())));
    }
    Ok(RgbImage { width, height, maxval: maxval as u16, pixels: data[..expected].to_vec() })
}

pub fn encode_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n{}\n", image.width, image.height, image.maxval).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

/// Nearest-neighbour resample to `height×width`, scaled to `[0, 1]` by maxval.
pub fn to_unit_pixels<T: Scalar>(image: &RgbImage, height: usize, width: usize) -> Vec<T> {
    let scale = 1.0 / image.maxval as f64;
    let mut out = Vec::with_capacity(height * width * 3);
    for y in 0..height {
        let sy = y * image.height / height;
        for x in 0..width {
            let sx = x * image.width / width;
            let base = (sy * image.width + sx) * 3;
            for c in 0..3 {
                out.push(T::lit((image.pixels[base + c] as f64 * scale).min(1.0)));
            }
        }
    }
    out
}

fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let wanted = if want_dirs {
            path.is_dir()
        } else {
            path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm"))
        };
        if wanted {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads `<root>/<class_name>/*.ppm`. Classes are numbered in lexicographic
/// directory order; images are resized to `height×width`.
pub fn load_dataset<T: Scalar>(root: &Path, height: usize, width: usize) -> Result<Dataset<T>> {
    if !root.is_dir() {
        return Err(Error::Config(format!("dataset directory {} does not exist", root.display())));
    }
    if height == 0 || width == 0 || !height.is_multiple_of(2) || !width.is_multiple_of(2) {
        return Err(Error::Config(format!("target size {height}×{width} must be positive and even")));
    }
    let class_dirs = sorted_entries(root, true)?;
    if class_dirs.is_empty() {
        return Err(Error::Config(format!("{} contains no class subdirectories", root.display())));
    }
    let mut class_names = Vec::new();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        let files = sorted_entries(dir, false)?;
        if files.is_empty() {
            return Err(Error::Config(format!("class directory {} holds no .ppm files", dir.display())));
        }
        class_names.push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        for file in files {
            let bytes = fs::read(&file)?;
            let image = decode_ppm(&bytes, &file)?;
            data.extend(to_unit_pixels::<T>(&image, height, width));
            labels.push(label);
        }
    }
    let n = labels.len();
    let (train, test) = stratified_split(&labels, class_names.len(), DIRECTORY_SPLIT_SEED);
    let images = Tensor::new(vec![n, height, width, 3], data)?;
    Dataset::new(images, labels, class_names, train, test)
}

/// Writes a dataset in the directory layout, quantizing pixels to 8 bits.
/// File names are zero-padded sample indices.
pub fn write_dataset_dir<T: Scalar>(dataset: &Dataset<T>, root: &Path) -> Result<()> {
    for name in dataset.class_names() {
        fs::create_dir_all(root.join(name))?;
    }
    let (h, w) = (dataset.height(), dataset.width());
    if dataset.channels() != 3 {
        return Err(Error::Input("PPM export needs 3-channel images".into()));
    }
    for i in 0..dataset.len() {
        let pixels = dataset
            .image(i)
            .iter()
            .map(|v| (v.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        let image = RgbImage { width: w, height: h, maxval: 255, pixels };
        let class = &dataset.class_names()[dataset.labels()[i]];
        fs::write(root.join(class).join(format!("{i:05}.ppm")), encode_ppm(&image))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("x.ppm")
    }

    #[test]
    fn one_red_pixel() {
        let mut bytes = b"P6\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0]);
        let img = decode_ppm(&bytes, p()).unwrap();
        assert_eq!(to_unit_pixels::<f64>(&img, 1, 1), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn comments_in_header() {
        let mut bytes = b"P6 # made by hand\n2 # width\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 10, 20, 30]);
        let img = decode_ppm(&bytes, p()).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(&img.pixels[3..], &[10, 20, 30]);
    }

    #[test]
    fn wrong_magic_names_the_file() {
        let err = decode_ppm(b"P5\n1 1\n255\n\0", Path::new("soil/a.ppm")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("soil/a.ppm") && msg.contains("magic"), "{msg}");
    }

    #[test]
    fn truncated_pixels() {
        let err = decode_ppm(b"P6\n2 2\n255\n\x01\x02\x03", p()).unwrap_err();
        assert!(err.to_string().contains("truncated"));
        assert!(decode_ppm(b"P6\n2", p()).is_err());
        assert!(decode_ppm(b"", p()).is_err());
    }

    #[test]
    fn encode_decode() {
        let img = RgbImage { width: 2, height: 2, maxval: 255, pixels: (0..12).collect() };
        assert_eq!(decode_ppm(&encode_ppm(&img), p()).unwrap(), img);
    }

    #[test]
    fn nearest_neighbour_upsample() {
        let img = RgbImage { width: 2, height: 1, maxval: 255, pixels: vec![0, 0, 0, 255, 255, 255] };
        let px = to_unit_pixels::<f64>(&img, 2, 4);
        let reds: Vec<f64> = px.chunks(3).map(|c| c[0]).collect();
        assert_eq!(reds, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    }
}
