//! Overlapping patches, one per 8×8 code block.
//!
//! Each patch is a `patch_size × patch_size` window placed one pixel up-left of
//! its block and shifted inward at the raster border, so it always lies inside
//! the raster and always contains its block. Patches are row-major vectors.

use thiserror::Error;

use crate::dct::Dct8x8;
use crate::raster::Plane;
use crate::scalar::Real;

pub const BLOCK: usize = 8;
pub const DEFAULT_PATCH_SIZE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatchError {
    #[error("patch layout mismatch: {0}")]
    LayoutMismatch(String),
}

fn mismatch(msg: impl Into<String>) -> PatchError {
    PatchError::LayoutMismatch(msg.into())
}

/// Where a patch sits and which code block it encloses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Enclosure {
    /// Top-left pixel of the patch in the raster.
    pub origin: (usize, usize),
    /// Code block coordinates `(bx, by)`.
    pub block: (usize, usize),
    /// Offset of the block's top-left inside the patch.
    pub offset: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchLayout {
    patch_size: usize,
    width: usize,
    height: usize,
    enclosures: Vec<Enclosure>,
}

fn place(block_index: usize, extent: usize, patch_size: usize) -> usize {
    let margin = (patch_size - BLOCK) / 2;
    (block_index * BLOCK).saturating_sub(margin).min(extent - patch_size)
}

impl PatchLayout {
    /// Layout for a block-aligned raster of `width × height` pixels.
    pub fn new(width: usize, height: usize, patch_size: usize) -> Result<Self, PatchError> {
        if patch_size <= BLOCK || patch_size > 2 * BLOCK {
            return Err(mismatch(format!("patch size {patch_size} outside 9..=16")));
        }
        if !width.is_multiple_of(BLOCK) || !height.is_multiple_of(BLOCK) {
            return Err(mismatch(format!("{width}x{height} raster is not block aligned")));
        }
        if width < patch_size || height < patch_size {
            return Err(mismatch(format!("{width}x{height} raster smaller than a {patch_size}px patch")));
        }
        let (bw, bh) = (width / BLOCK, height / BLOCK);
        let mut enclosures = Vec::with_capacity(bw * bh);
        for by in 0..bh {
            let oy = place(by, height, patch_size);
            for bx in 0..bw {
                let ox = place(bx, width, patch_size);
                enclosures.push(Enclosure {
                    origin: (ox, oy),
                    block: (bx, by),
                    offset: (bx * BLOCK - ox, by * BLOCK - oy),
                });
            }
        }
        Ok(Self { patch_size, width, height, enclosures })
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    /// Pixels per patch.
    pub fn patch_len(&self) -> usize {
        self.patch_size * self.patch_size
    }

    pub fn stride(&self) -> usize {
        BLOCK
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.enclosures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.enclosures.is_empty()
    }

    pub fn enclosures(&self) -> &[Enclosure] {
        &self.enclosures
    }

    pub fn enclosure(&self, k: usize) -> &Enclosure {
        &self.enclosures[k]
    }

    /// Indices into patch `k` of its block's 64 pixels, row-major (the selection `M`).
    pub fn selection(&self, k: usize) -> [usize; 64] {
        selection_map(self.patch_size, self.enclosures[k].offset)
    }

    /// Number of patches covering each raster pixel.
    pub fn coverage(&self) -> Vec<u32> {
        let mut count = vec![0u32; self.width * self.height];
        for e in &self.enclosures {
            for y in 0..self.patch_size {
                let row = (e.origin.1 + y) * self.width + e.origin.0;
                for c in &mut count[row..row + self.patch_size] {
                    *c += 1;
                }
            }
        }
        count
    }

    fn check_plane<T>(&self, plane: &Plane<T>) -> Result<(), PatchError>
    where
        T: Real,
    {
        if plane.width() != self.width || plane.height() != self.height {
            return Err(mismatch(format!(
                "raster {}x{} vs layout {}x{}",
                plane.width(),
                plane.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}

pub fn selection_map(patch_size: usize, offset: (usize, usize)) -> [usize; 64] {
    let mut idx = [0usize; 64];
    for (i, slot) in idx.iter_mut().enumerate() {
        *slot = (offset.1 + i / BLOCK) * patch_size + offset.0 + i % BLOCK;
    }
    idx
}

pub fn extract_patch<T: Real>(plane: &Plane<T>, layout: &PatchLayout, k: usize) -> Vec<T> {
    let p = layout.patch_size;
    let (ox, oy) = layout.enclosures[k].origin;
    let data = plane.data();
    let mut out = Vec::with_capacity(p * p);
    for y in 0..p {
        let row = (oy + y) * layout.width + ox;
        out.extend_from_slice(&data[row..row + p]);
    }
    out
}

pub fn extract_patches<T: Real>(plane: &Plane<T>, layout: &PatchLayout) -> Result<Vec<Vec<T>>, PatchError> {
    layout.check_plane(plane)?;
    Ok((0..layout.len()).map(|k| extract_patch(plane, layout, k)).collect())
}

/// Per-pixel mean over covering patches, accumulated in patch-index order.
pub fn assemble_patches<T: Real>(patches: &[Vec<T>], layout: &PatchLayout) -> Result<Plane<T>, PatchError> {
    if patches.len() != layout.len() {
        return Err(mismatch(format!("{} patches for a {}-patch layout", patches.len(), layout.len())));
    }
    let p = layout.patch_size;
    // mean = first + Σ(v − first)/count, so agreeing patches reproduce their value exactly
    let mut first: Vec<Option<T>> = vec![None; layout.width * layout.height];
    let mut sum = vec![T::zero(); layout.width * layout.height];
    for (patch, e) in patches.iter().zip(&layout.enclosures) {
        if patch.len() != p * p {
            return Err(mismatch(format!("patch of length {} but expected {}", patch.len(), p * p)));
        }
        for y in 0..p {
            let row = (e.origin.1 + y) * layout.width + e.origin.0;
            let src = &patch[y * p..(y + 1) * p];
            for ((acc, base), &v) in sum[row..row + p].iter_mut().zip(&mut first[row..row + p]).zip(src) {
                *acc += v - *base.get_or_insert(v);
            }
        }
    }
    for ((acc, base), &c) in sum.iter_mut().zip(&first).zip(&layout.coverage()) {
        *acc = base.unwrap_or_else(T::zero) + *acc / T::from_u32(c).expect("small count");
    }
    Ok(Plane::new(layout.width, layout.height, sum))
}

/// Like [`assemble_patches`] but accepts `(patch index, patch)` pairs in any order.
pub fn assemble_indexed<T: Real>(patches: Vec<(usize, Vec<T>)>, layout: &PatchLayout) -> Result<Plane<T>, PatchError> {
    let mut slots: Vec<Option<Vec<T>>> = vec![None; layout.len()];
    for (k, patch) in patches {
        let slot = slots.get_mut(k).ok_or_else(|| mismatch(format!("patch index {k} out of range")))?;
        if slot.replace(patch).is_some() {
            return Err(mismatch(format!("patch index {k} given twice")));
        }
    }
    let ordered = slots
        .into_iter()
        .enumerate()
        .map(|(k, s)| s.ok_or_else(|| mismatch(format!("patch {k} missing"))))
        .collect::<Result<Vec<_>, _>>()?;
    assemble_patches(&ordered, layout)
}

pub fn block_of_patch<T: Real>(patch: &[T], selection: &[usize; 64]) -> [T; 64] {
    let mut block = [T::zero(); 64];
    for (b, &i) in block.iter_mut().zip(selection) {
        *b = patch[i];
    }
    block
}

/// Orthonormal 8×8 DCT of the block enclosed by `patch`.
pub fn block_dct_of_patch<T: Real>(patch: &[T], selection: &[usize; 64], dct: &Dct8x8<T>) -> [T; 64] {
    dct.forward(&block_of_patch(patch, selection))
}

/// Writes 64 block pixels back into `patch`.
pub fn write_block<T: Real>(patch: &mut [T], selection: &[usize; 64], block: &[T; 64]) {
    for (&i, &v) in selection.iter().zip(block) {
        patch[i] = v;
    }
}
