//! PSG1 grid container.
//!
//! An 18-byte little-endian header followed by a row-major,
//! channel-interleaved payload:
//!
//! | offset | size | field        |
//! |--------|------|--------------|
//! | 0      | 4    | magic `PSG1` |
//! | 4      | 2    | version (1)  |
//! | 6      | 1    | kind         |
//! | 7      | 4    | height       |
//! | 11     | 4    | width        |
//! | 15     | 2    | channels     |
//! | 17     | 1    | scalar width (4 or 8) |
//!
//! Kinds: 1 SLC (6 scalars: re/im of HH, HV, VV), 2 covariance (9 scalars:
//! d11 d22 d33 re c12 im c12 re c13 im c13 re c23 im c23), 3 optical
//! (one scalar per band), 4 labels (one unsigned integer per pixel).
//! Real scalars are IEEE floats of the given width; labels are `u32` or
//! `u64`. 32-bit files are widened to 64-bit on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use pgnlm_core::{CovGrid, Grid, HermitianCov3, LabelGrid, OpticalGrid, ScatteringVector, SlcGrid};

pub const MAGIC: [u8; 4] = *b"PSG1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;
/// Default ceiling on the payload size a reader will accept.
pub const DEFAULT_SIZE_CAP: u64 = 2 << 30;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {0:?}, expected \"PSG1\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown grid kind {0}")]
    UnknownKind(u8),
    #[error("bad scalar width {0}, expected 4 or 8")]
    BadScalarWidth(u8),
    #[error("{kind} grid needs {expected} channels, header says {got}")]
    ChannelMismatch {
        kind: GridKind,
        expected: u16,
        got: u16,
    },
    #[error("length mismatch: header implies {expected} payload bytes, found {found}")]
    LengthMismatch { expected: u64, found: u64 },
    #[error("payload of {bytes} bytes exceeds the {cap}-byte cap")]
    TooLarge { bytes: u64, cap: u64 },
    #[error("truncated header")]
    TruncatedHeader,
    #[error("expected a {expected} grid, found {found}")]
    WrongKind { expected: GridKind, found: GridKind },
    #[error("value {0} does not fit the file's scalar width")]
    OutOfRange(f64),
    #[error("label {0} does not fit in 32 bits")]
    LabelOverflow(u64),
    #[error("dimension {0} does not fit the header field")]
    DimensionTooLarge(usize),
    #[error(transparent)]
    Grid(#[from] pgnlm_core::Error),
}

impl IoError {
    fn at(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Slc = 1,
    Covariance = 2,
    Optical = 3,
    Labels = 4,
}

impl GridKind {
    pub fn from_code(code: u8) -> Result<Self, IoError> {
        Ok(match code {
            1 => GridKind::Slc,
            2 => GridKind::Covariance,
            3 => GridKind::Optical,
            4 => GridKind::Labels,
            other => return Err(IoError::UnknownKind(other)),
        })
    }

    /// Fixed channel count, `None` for optical grids.
    fn channels(self) -> Option<u16> {
        match self {
            GridKind::Slc => Some(6),
            GridKind::Covariance => Some(9),
            GridKind::Optical => None,
            GridKind::Labels => Some(1),
        }
    }
}

impl std::fmt::Display for GridKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GridKind::Slc => "SLC",
            GridKind::Covariance => "covariance",
            GridKind::Optical => "optical",
            GridKind::Labels => "label",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalarWidth {
    F32 = 4,
    #[default]
    F64 = 8,
}

impl ScalarWidth {
    pub fn from_bytes(b: u8) -> Result<Self, IoError> {
        match b {
            4 => Ok(ScalarWidth::F32),
            8 => Ok(ScalarWidth::F64),
            other => Err(IoError::BadScalarWidth(other)),
        }
    }

    pub fn bytes(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridHeader {
    pub kind: GridKind,
    pub height: u32,
    pub width: u32,
    pub channels: u16,
    pub scalar_width: ScalarWidth,
}

impl GridHeader {
    pub fn payload_len(&self) -> u64 {
        // saturates so hostile headers fail the size cap instead of wrapping
        (self.height as u64 * self.width as u64)
            .saturating_mul(self.channels as u64 * self.scalar_width.bytes() as u64)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&VERSION.to_le_bytes());
        b[6] = self.kind as u8;
        b[7..11].copy_from_slice(&self.height.to_le_bytes());
        b[11..15].copy_from_slice(&self.width.to_le_bytes());
        b[15..17].copy_from_slice(&self.channels.to_le_bytes());
        b[17] = self.scalar_width as u8;
        b
    }

    pub fn parse(b: &[u8]) -> Result<Self, IoError> {
        if b.len() < HEADER_LEN {
            return Err(IoError::TruncatedHeader);
        }
        let magic: [u8; 4] = b[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(IoError::BadMagic(magic));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(IoError::UnsupportedVersion(version));
        }
        let kind = GridKind::from_code(b[6])?;
        let header = GridHeader {
            kind,
            height: u32::from_le_bytes(b[7..11].try_into().unwrap()),
            width: u32::from_le_bytes(b[11..15].try_into().unwrap()),
            channels: u16::from_le_bytes([b[15], b[16]]),
            scalar_width: ScalarWidth::from_bytes(b[17])?,
        };
        match kind.channels() {
            Some(expected) if expected != header.channels => Err(IoError::ChannelMismatch {
                kind,
                expected,
                got: header.channels,
            }),
            _ => Ok(header),
        }
    }
}

/// Any grid that can live in a PSG1 file.
#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Slc(SlcGrid),
    Covariance(CovGrid),
    Optical(OpticalGrid),
    Labels(LabelGrid),
}

impl GridData {
    pub fn kind(&self) -> GridKind {
        match self {
            GridData::Slc(_) => GridKind::Slc,
            GridData::Covariance(_) => GridKind::Covariance,
            GridData::Optical(_) => GridKind::Optical,
            GridData::Labels(_) => GridKind::Labels,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            GridData::Slc(g) => g.dims(),
            GridData::Covariance(g) => g.dims(),
            GridData::Optical(g) => g.dims(),
            GridData::Labels(g) => g.dims(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            GridData::Optical(g) => g.bands(),
            other => other.kind().channels().unwrap() as usize,
        }
    }

    pub fn into_slc(self) -> Result<SlcGrid, IoError> {
        match self {
            GridData::Slc(g) => Ok(g),
            other => Err(other.wrong(GridKind::Slc)),
        }
    }

    pub fn into_covariance(self) -> Result<CovGrid, IoError> {
        match self {
            GridData::Covariance(g) => Ok(g),
            other => Err(other.wrong(GridKind::Covariance)),
        }
    }

    pub fn into_optical(self) -> Result<OpticalGrid, IoError> {
        match self {
            GridData::Optical(g) => Ok(g),
            other => Err(other.wrong(GridKind::Optical)),
        }
    }

    pub fn into_labels(self) -> Result<LabelGrid, IoError> {
        match self {
            GridData::Labels(g) => Ok(g),
            other => Err(other.wrong(GridKind::Labels)),
        }
    }

    fn wrong(&self, expected: GridKind) -> IoError {
        IoError::WrongKind {
            expected,
            found: self.kind(),
        }
    }

    fn header(&self, scalar_width: ScalarWidth) -> Result<GridHeader, IoError> {
        let (h, w) = self.dims();
        let dim = |n: usize| u32::try_from(n).map_err(|_| IoError::DimensionTooLarge(n));
        let channels = self.channels();
        Ok(GridHeader {
            kind: self.kind(),
            height: dim(h)?,
            width: dim(w)?,
            channels: u16::try_from(channels).map_err(|_| IoError::DimensionTooLarge(channels))?,
            scalar_width,
        })
    }
}

impl From<SlcGrid> for GridData {
    fn from(g: SlcGrid) -> Self {
        GridData::Slc(g)
    }
}

impl From<CovGrid> for GridData {
    fn from(g: CovGrid) -> Self {
        GridData::Covariance(g)
    }
}

impl From<OpticalGrid> for GridData {
    fn from(g: OpticalGrid) -> Self {
        GridData::Optical(g)
    }
}

impl From<LabelGrid> for GridData {
    fn from(g: LabelGrid) -> Self {
        GridData::Labels(g)
    }
}

fn put_real(buf: &mut Vec<u8>, v: f64, width: ScalarWidth) -> Result<(), IoError> {
    match width {
        ScalarWidth::F64 => buf.extend_from_slice(&v.to_le_bytes()),
        ScalarWidth::F32 => {
            let n = v as f32;
            if n.is_infinite() && v.is_finite() {
                return Err(IoError::OutOfRange(v));
            }
            buf.extend_from_slice(&n.to_le_bytes());
        }
    }
    Ok(())
}

/// Header plus payload as bytes.
pub fn encode(grid: &GridData, scalar_width: ScalarWidth) -> Result<Vec<u8>, IoError> {
    let header = grid.header(scalar_width)?;
    let mut buf = Vec::with_capacity(HEADER_LEN + header.payload_len() as usize);
    buf.extend_from_slice(&header.to_bytes());
    match grid {
        GridData::Slc(g) => {
            for s in g.data() {
                for v in s.to_parts() {
                    put_real(&mut buf, v, scalar_width)?;
                }
            }
        }
        GridData::Covariance(g) => {
            for c in g.data() {
                for v in c.to_scalars() {
                    put_real(&mut buf, v, scalar_width)?;
                }
            }
        }
        GridData::Optical(g) => {
            for &v in g.data() {
                put_real(&mut buf, v, scalar_width)?;
            }
        }
        GridData::Labels(g) => {
            for &l in g.data() {
                match scalar_width {
                    ScalarWidth::F32 => buf.extend_from_slice(&l.to_le_bytes()),
                    ScalarWidth::F64 => buf.extend_from_slice(&(l as u64).to_le_bytes()),
                }
            }
        }
    }
    Ok(buf)
}

/// Parses a PSG1 stream, refusing payloads larger than `cap` bytes before
/// allocating for them.
pub fn decode_from<R: Read>(mut reader: R, cap: u64) -> Result<GridData, DecodeError> {
    let mut head = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match reader.read(&mut head[got..]) {
            Ok(0) => return Err(IoError::TruncatedHeader.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(DecodeError::Io(e)),
        }
    }
    let header = GridHeader::parse(&head)?;
    let expected = header.payload_len();
    if expected > cap {
        return Err(IoError::TooLarge {
            bytes: expected,
            cap,
        }
        .into());
    }
    let mut payload = Vec::with_capacity(expected as usize);
    reader
        .by_ref()
        .take(expected + 1)
        .read_to_end(&mut payload)
        .map_err(DecodeError::Io)?;
    if payload.len() as u64 != expected {
        // one byte past the header-implied length is enough to tell
        let found = if (payload.len() as u64) > expected {
            expected
                + 1
                + std::io::copy(&mut reader, &mut std::io::sink()).map_err(DecodeError::Io)?
        } else {
            payload.len() as u64
        };
        return Err(IoError::LengthMismatch { expected, found }.into());
    }
    Ok(decode_payload(&header, &payload)?)
}

/// Read failure before the path is known.
#[derive(Debug)]
pub enum DecodeError {
    Io(std::io::Error),
    Format(IoError),
}

impl From<IoError> for DecodeError {
    fn from(e: IoError) -> Self {
        DecodeError::Format(e)
    }
}

impl DecodeError {
    fn with_path(self, path: &Path) -> IoError {
        match self {
            DecodeError::Io(e) => IoError::at(path, e),
            DecodeError::Format(e) => e,
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<GridData, IoError> {
    decode_from(bytes, DEFAULT_SIZE_CAP).map_err(|e| e.with_path(Path::new("<memory>")))
}

fn reals(payload: &[u8], width: ScalarWidth) -> Vec<f64> {
    match width {
        ScalarWidth::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        ScalarWidth::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    }
}

fn decode_payload(header: &GridHeader, payload: &[u8]) -> Result<GridData, IoError> {
    let (h, w) = (header.height as usize, header.width as usize);
    let width = header.scalar_width;
    Ok(match header.kind {
        GridKind::Slc => {
            let v = reals(payload, width);
            let data = v
                .chunks_exact(6)
                .map(|c| ScatteringVector::from_parts(c.try_into().unwrap()))
                .collect();
            let g = Grid::new(h, w, data)?;
            g.validate()?;
            GridData::Slc(g)
        }
        GridKind::Covariance => {
            let v = reals(payload, width);
            let data = v
                .chunks_exact(9)
                .map(|c| HermitianCov3::from_scalars(c.try_into().unwrap()))
                .collect();
            let g: CovGrid = Grid::new(h, w, data)?;
            if !g.data().iter().all(HermitianCov3::is_finite) {
                return Err(pgnlm_core::Error::NonFinite("covariance grid").into());
            }
            GridData::Covariance(g)
        }
        GridKind::Optical => GridData::Optical(OpticalGrid::new(
            h,
            w,
            header.channels as usize,
            reals(payload, width),
        )?),
        GridKind::Labels => {
            let data = match width {
                ScalarWidth::F32 => payload
                    .chunks_exact(4)
                    .map(|c| Ok(u32::from_le_bytes(c.try_into().unwrap())))
                    .collect::<Result<Vec<_>, IoError>>()?,
                ScalarWidth::F64 => payload
                    .chunks_exact(8)
                    .map(|c| {
                        let v = u64::from_le_bytes(c.try_into().unwrap());
                        u32::try_from(v).map_err(|_| IoError::LabelOverflow(v))
                    })
                    .collect::<Result<Vec<_>, IoError>>()?,
            };
            GridData::Labels(Grid::new(h, w, data)?)
        }
    })
}

pub fn write_grid(
    path: impl AsRef<Path>,
    grid: &GridData,
    scalar_width: ScalarWidth,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let bytes = encode(grid, scalar_width)?;
    let mut f = BufWriter::new(File::create(path).map_err(|e| IoError::at(path, e))?);
    f.write_all(&bytes).map_err(|e| IoError::at(path, e))?;
    f.flush().map_err(|e| IoError::at(path, e))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridData, IoError> {
    read_grid_capped(path, DEFAULT_SIZE_CAP)
}

pub fn read_grid_capped(path: impl AsRef<Path>, cap: u64) -> Result<GridData, IoError> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| IoError::at(path, e))?;
    decode_from(BufReader::new(f), cap).map_err(|e| e.with_path(path))
}

/// Reads only the header.
pub fn read_header(path: impl AsRef<Path>) -> Result<GridHeader, IoError> {
    let path = path.as_ref();
    let mut f = File::open(path).map_err(|e| IoError::at(path, e))?;
    let mut head = [0u8; HEADER_LEN];
    f.read_exact(&mut head).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => IoError::TruncatedHeader,
        _ => IoError::at(path, e),
    })?;
    GridHeader::parse(&head)
}
