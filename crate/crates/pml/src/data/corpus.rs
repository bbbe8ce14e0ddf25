//! Binary corpus container, readable from any language with a few lines of
//! struct unpacking.
//!
//! Layout, all little-endian: magic "PMLD", version u32, record count u32,
//! width u16, height u16, record kind u8 (1 = labeled frame, 2 =
//! transition), then the records. Each record is one f32 action followed by
//! the row-major f32 pixels of its image (labeled frame) or of its two
//! images in order (transition). Every load re-validates pixel and action
//! ranges, so a corrupt file cannot smuggle an invalid sample into training.

use crate::data::{LabeledFrame, TransitionSample};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::steer::SteeringAction;
use std::path::Path;

const MAGIC: [u8; 4] = *b"PMLD";
const VERSION: u32 = 1;
const KIND_FRAME: u8 = 1;
const KIND_TRANSITION: u8 = 2;

struct Header {
    count: usize,
    width: usize,
    height: usize,
}

fn write_header(out: &mut Vec<u8>, count: usize, size: usize, kind: u8) -> Result<()> {
    let count32 = u32::try_from(count)
        .map_err(|_| Error::CorruptFile(format!("record count {count} exceeds u32")))?;
    let dim = u16::try_from(size)
        .map_err(|_| Error::CorruptFile(format!("image size {size} exceeds u16")))?;
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&count32.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.push(kind);
    Ok(())
}

fn push_image(out: &mut Vec<u8>, image: &GrayImage) {
    for &v in image.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Shared size check: every image in the corpus must agree.
fn check_size(size: &mut Option<usize>, image: &GrayImage) -> Result<usize> {
    match *size {
        None => {
            *size = Some(image.size());
            Ok(image.size())
        }
        Some(s) if s == image.size() => Ok(s),
        Some(_) => Err(Error::MixedImageSizes),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated { wanted: n })?;
        if end > self.bytes.len() {
            return Err(Error::Truncated { wanted: end - self.bytes.len() });
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn image(&mut self, width: usize, height: usize) -> Result<GrayImage> {
        let mut data = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            data.push(self.f32()? as f64);
        }
        GrayImage::new(width, height, data)
    }

    fn header(&mut self, expected_kind: u8) -> Result<Header> {
        let magic: [u8; 4] = self.take(4)?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(Error::BadMagic { expected: MAGIC, found: magic });
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let count = self.u32()? as usize;
        let width = self.u16()? as usize;
        let height = self.u16()? as usize;
        let kind = self.u8()?;
        if kind != KIND_FRAME && kind != KIND_TRANSITION {
            return Err(Error::CorruptFile(format!("unknown record kind {kind}")));
        }
        if kind != expected_kind {
            return Err(Error::CorruptFile(format!(
                "record kind {kind} where {expected_kind} was expected"
            )));
        }
        Ok(Header { count, width, height })
    }

    fn finish(&self) -> Result<()> {
        let left = self.bytes.len() - self.pos;
        if left > 0 {
            return Err(Error::CorruptFile(format!("{left} trailing bytes after records")));
        }
        Ok(())
    }
}

pub fn frames_to_bytes(frames: &[LabeledFrame]) -> Result<Vec<u8>> {
    let mut size = None;
    for f in frames {
        check_size(&mut size, &f.obs)?;
    }
    let mut out = Vec::new();
    write_header(&mut out, frames.len(), size.unwrap_or(0), KIND_FRAME)?;
    for f in frames {
        out.extend_from_slice(&(f.action.value() as f32).to_le_bytes());
        push_image(&mut out, &f.obs);
    }
    Ok(out)
}

pub fn frames_from_bytes(bytes: &[u8]) -> Result<Vec<LabeledFrame>> {
    let mut r = Reader::new(bytes);
    let h = r.header(KIND_FRAME)?;
    let mut frames = Vec::new();
    for _ in 0..h.count {
        let action = SteeringAction::new(r.f32()? as f64)?;
        let obs = r.image(h.width, h.height)?;
        frames.push(LabeledFrame { obs, action });
    }
    r.finish()?;
    Ok(frames)
}

pub fn transitions_to_bytes(samples: &[TransitionSample]) -> Result<Vec<u8>> {
    let mut size = None;
    for s in samples {
        check_size(&mut size, &s.obs)?;
        check_size(&mut size, &s.next_obs)?;
    }
    let mut out = Vec::new();
    write_header(&mut out, samples.len(), size.unwrap_or(0), KIND_TRANSITION)?;
    for s in samples {
        out.extend_from_slice(&(s.action.value() as f32).to_le_bytes());
        push_image(&mut out, &s.obs);
        push_image(&mut out, &s.next_obs);
    }
    Ok(out)
}

pub fn transitions_from_bytes(bytes: &[u8]) -> Result<Vec<TransitionSample>> {
    let mut r = Reader::new(bytes);
    let h = r.header(KIND_TRANSITION)?;
    let mut samples = Vec::new();
    for _ in 0..h.count {
        let action = SteeringAction::new(r.f32()? as f64)?;
        let obs = r.image(h.width, h.height)?;
        let next_obs = r.image(h.width, h.height)?;
        samples.push(TransitionSample::new(obs, action, next_obs)?);
    }
    r.finish()?;
    Ok(samples)
}

pub fn save_frames(path: &Path, frames: &[LabeledFrame]) -> Result<()> {
    Ok(std::fs::write(path, frames_to_bytes(frames)?)?)
}

pub fn load_frames(path: &Path) -> Result<Vec<LabeledFrame>> {
    frames_from_bytes(&std::fs::read(path)?)
}

pub fn save_transitions(path: &Path, samples: &[TransitionSample]) -> Result<()> {
    Ok(std::fs::write(path, transitions_to_bytes(samples)?)?)
}

pub fn load_transitions(path: &Path) -> Result<Vec<TransitionSample>> {
    transitions_from_bytes(&std::fs::read(path)?)
}
