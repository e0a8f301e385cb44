"""Synthetic camera pipeline: frame rendering and ball localisation.

Stands in for the physical camera.  Frames are rendered as a flat
background, a black platform square and an anti-aliased ball disk, then
recovered through blur -> HSV -> threshold -> connected components.  All
operations are pure over immutable images; byte pixels with float
intermediates, rounding half away from zero so goldens are bit exact.

Pixel coordinates are (x right, y down); platform coordinates are mm with
y up, so the projection flips the vertical axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LAYOUTS = ("RGB8", "HSV8", "GRAY8", "MASK1")


class LayoutError(ValueError):
    """Image layout does not match what the operation expects."""


class BallNotFound(RuntimeError):
    """No blob in the frame qualifies as the ball."""


def _round_half_away(a):
    # np.round ties to even; the pipeline contract is half away from zero
    return np.floor(np.abs(a) + 0.5) * np.sign(a)


def _to_u8(a):
    """Round half away from zero, then clamp to the byte range.

    After clamping, floor(a + 0.5) computes exactly that: ties round up
    for positive values and every negative value ends at zero either way.
    """
    a = a + 0.5
    np.floor(a, out=a)
    np.clip(a, 0.0, 255.0, out=a)
    return a.astype(np.uint8)


@dataclass(frozen=True)
class Image:
    """Row-major byte raster with an explicit layout tag."""

    data: np.ndarray
    layout: str

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise LayoutError(f"unknown layout {self.layout!r}")
        arr = np.asarray(self.data)
        if arr.dtype != np.uint8:
            raise LayoutError("pixel buffer must be uint8")
        want3 = self.layout in ("RGB8", "HSV8")
        if want3 and (arr.ndim != 3 or arr.shape[2] != 3):
            raise LayoutError(f"{self.layout} needs an (h, w, 3) buffer")
        if not want3 and arr.ndim != 2:
            raise LayoutError(f"{self.layout} needs an (h, w) buffer")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise LayoutError("image must be at least 1x1")
        if self.layout == "MASK1":
            bad = (arr != 0) & (arr != 255)
            if bad.any():
                raise LayoutError("MASK1 pixels must be 0 or 255")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def require(self, layout: str):
        if self.layout != layout:
            raise LayoutError(f"expected {layout}, got {self.layout}")


@dataclass(frozen=True)
class HsvRange:
    """Inclusive HSV window; hue in degrees with wraparound (lo > hi wraps)."""

    hue_lo: float
    hue_hi: float
    sat_lo: float
    sat_hi: float
    val_lo: float
    val_hi: float

    def __post_init__(self):
        for name in ("hue_lo", "hue_hi"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 360.0:
                raise ValueError(f"{name} must be in [0, 360], got {v}")
            object.__setattr__(self, name, v)
        for pair in (("sat_lo", "sat_hi"), ("val_lo", "val_hi")):
            lo, hi = (float(getattr(self, n)) for n in pair)
            if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0):
                raise ValueError(f"{pair[0]}/{pair[1]} must be in [0, 1]")
            if lo > hi:
                raise ValueError(f"{pair[0]} > {pair[1]}")
            object.__setattr__(self, pair[0], lo)
            object.__setattr__(self, pair[1], hi)


@dataclass(frozen=True)
class Blob:
    """8-connected component of a mask."""

    area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive
    boundary: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.area < 1:
            raise ValueError("blob area must be >= 1")
        x0, y0, x1, y1 = self.bbox
        cx, cy = self.centroid
        if not (x0 <= cx <= x1 and y0 <= cy <= y1):
            raise ValueError("centroid must lie inside the bounding box")

    def perimeter(self) -> float:
        """Contour length: unit steps plus sqrt(2) diagonals."""
        if len(self.boundary) < 2:
            return 1.0
        pts = np.asarray(self.boundary + (self.boundary[0],), dtype=float)
        steps = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        return float(steps.sum())

    def circularity(self) -> float:
        """4*pi*area / perimeter^2, clamped to [0, 1]; 1 for an ideal disk."""
        p = self.perimeter()
        if p <= 0.0:
            return 1.0
        return min(1.0, 4.0 * math.pi * self.area / (p * p))


@dataclass(frozen=True)
class Calibration:
    """Maps pixel coordinates to platform mm coordinates."""

    mm_per_pixel: float
    platform_center_px: tuple[float, float]

    def __post_init__(self):
        if not (math.isfinite(self.mm_per_pixel) and self.mm_per_pixel > 0):
            raise ValueError("mm_per_pixel must be positive and finite")

    def to_mm(self, px: float, py: float) -> tuple[float, float]:
        cx, cy = self.platform_center_px
        return (px - cx) * self.mm_per_pixel, (cy - py) * self.mm_per_pixel

    def to_px(self, x_mm: float, y_mm: float) -> tuple[float, float]:
        cx, cy = self.platform_center_px
        return cx + x_mm / self.mm_per_pixel, cy - y_mm / self.mm_per_pixel


@dataclass(frozen=True)
class SceneConfig:
    """Geometry and colors of the rendered scene."""

    width: int = 640
    height: int = 480
    mm_per_pixel: float = 1.0
    center_px: tuple[float, float] = (320.0, 240.0)
    plate_half_extent_mm: float = 200.0
    # 40 mm ball: large enough that the mask pixel count tracks pi r^2
    # within lattice noise and the centroid is stable under sensor noise
    ball_radius_mm: float = 20.0
    background_rgb: tuple[int, int, int] = (96, 96, 96)
    platform_rgb: tuple[int, int, int] = (8, 8, 8)
    ball_rgb: tuple[int, int, int] = (235, 110, 30)

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError("scene must be at least 8x8 pixels")
        if not (math.isfinite(self.mm_per_pixel) and self.mm_per_pixel > 0):
            raise ValueError("mm_per_pixel must be positive")
        if self.ball_radius_mm <= 0 or self.plate_half_extent_mm <= 0:
            raise ValueError("ball radius and plate extent must be positive")

    def calibration(self) -> Calibration:
        return Calibration(self.mm_per_pixel, self.center_px)


@dataclass(frozen=True)
class VisionParams:
    """Detection pipeline settings, tuned for the synthetic scene."""

    blur_sigma: float = 1.5
    noise_sigma: float = 0.0
    # val_lo 0.46 cuts the anti-aliased rim at half coverage, so the mask
    # area of a rendered ball tracks pi r^2
    ball_range: HsvRange = field(
        default_factory=lambda: HsvRange(340.0, 50.0, 0.35, 1.0, 0.46, 1.0)
    )
    min_area_px: int = 30
    max_area_px: int = 20000
    min_circularity: float = 0.55

    def __post_init__(self):
        if self.blur_sigma < 0 or self.noise_sigma < 0:
            raise ValueError("sigmas must be non-negative")
        if not 1 <= self.min_area_px <= self.max_area_px:
            raise ValueError("need 1 <= min_area_px <= max_area_px")
        if not 0.0 <= self.min_circularity <= 1.0:
            raise ValueError("min_circularity must be in [0, 1]")


# --- rendering ---------------------------------------------------------

_BACKGROUND_CACHE: dict[SceneConfig, np.ndarray] = {}


def _background(scene: SceneConfig) -> np.ndarray:
    cached = _BACKGROUND_CACHE.get(scene)
    if cached is None:
        frame = np.empty((scene.height, scene.width, 3), dtype=np.uint8)
        frame[:, :] = scene.background_rgb
        half = scene.plate_half_extent_mm / scene.mm_per_pixel
        cx, cy = scene.center_px
        x0 = max(0, int(math.ceil(cx - half)))
        x1 = min(scene.width - 1, int(math.floor(cx + half)))
        y0 = max(0, int(math.ceil(cy - half)))
        y1 = min(scene.height - 1, int(math.floor(cy + half)))
        if x0 <= x1 and y0 <= y1:
            frame[y0 : y1 + 1, x0 : x1 + 1] = scene.platform_rgb
        frame.setflags(write=False)
        cached = frame
        if len(_BACKGROUND_CACHE) < 64:
            _BACKGROUND_CACHE[scene] = frame
    return cached


def render_frame(
    ball_pos: tuple[float, float],
    scene: SceneConfig,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Image:
    """Raster of the scene with the ball at ``ball_pos`` (mm).

    The disk is anti-aliased by pixel coverage.  With ``noise_sigma > 0``
    additive Gaussian noise is drawn from ``rng``; rendering is bit
    deterministic for a fixed generator state.
    """
    x_mm, y_mm = (float(v) for v in ball_pos)
    if not (math.isfinite(x_mm) and math.isfinite(y_mm)):
        raise ValueError("ball position must be finite")
    frame = _background(scene).copy()
    cal = scene.calibration()
    px, py = cal.to_px(x_mm, y_mm)
    r = scene.ball_radius_mm / scene.mm_per_pixel
    x0 = max(0, int(math.floor(px - r - 1)))
    x1 = min(scene.width - 1, int(math.ceil(px + r + 1)))
    y0 = max(0, int(math.floor(py - r - 1)))
    y1 = min(scene.height - 1, int(math.ceil(py + r + 1)))
    if x0 <= x1 and y0 <= y1:
        ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
        dist = np.hypot(xs - px, ys - py)
        cover = np.clip(r + 0.5 - dist, 0.0, 1.0)[:, :, None]
        patch = frame[y0 : y1 + 1, x0 : x1 + 1].astype(np.float64)
        ball = np.asarray(scene.ball_rgb, dtype=np.float64)
        frame[y0 : y1 + 1, x0 : x1 + 1] = _to_u8(patch * (1.0 - cover) + ball * cover)
    if noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noise_sigma > 0 requires an rng")
        noise = rng.standard_normal(frame.shape, dtype=np.float32)
        noise *= np.float32(noise_sigma)
        noise += frame
        frame = _to_u8(noise)
    return Image(frame, "RGB8")


# --- pixel operations --------------------------------------------------


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian with radius ceil(3 sigma)."""
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValueError("sigma must be positive")
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = (len(kernel) - 1) // 2
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="edge")
    # window axis is appended last, so the matmul contracts it
    windows = np.lib.stride_tricks.sliding_window_view(padded, len(kernel), axis=axis)
    return windows @ kernel


def _blur_plane(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return _convolve_axis(_convolve_axis(plane, kernel, 1), kernel, 0)


def gaussian_blur(img: Image, sigma: float) -> Image:
    """Separable Gaussian blur with clamp-to-edge padding."""
    if img.layout == "MASK1":
        raise LayoutError("blurring a MASK1 image would break its binary range")
    kernel = gaussian_kernel(sigma).astype(np.float32)
    arr = img.data.astype(np.float32)
    if arr.ndim == 2:
        out = _blur_plane(arr, kernel)
    else:
        out = np.empty_like(arr)
        for c in range(arr.shape[2]):
            out[:, :, c] = _blur_plane(np.ascontiguousarray(arr[:, :, c]), kernel)
    return Image(_to_u8(out), img.layout)


def rgb_to_hsv(img: Image) -> Image:
    """Hexcone conversion; H byte spans 0..360 degrees, S and V are 0..255."""
    img.require("RGB8")
    rgb = img.data.astype(np.float32)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    v = np.maximum(np.maximum(r, g), b)
    c = np.minimum(np.minimum(r, g), b)
    np.subtract(v, c, out=c)  # chroma
    inv = np.where(c == 0.0, np.float32(1.0), c)
    np.divide(np.float32(60.0), inv, out=inv)  # degrees per unit chroma
    h_r = (g - b) * inv
    h_r[h_r < 0] += np.float32(360.0)
    h_g = (b - r) * inv
    h_g += np.float32(120.0)
    h_b = (r - g) * inv
    h_b += np.float32(240.0)
    h = np.where(v == r, h_r, np.where(v == g, h_g, h_b))
    h[c == 0.0] = 0.0
    s = np.where(v == 0.0, np.float32(1.0), v)
    np.divide(c, s, out=s)
    s *= np.float32(255.0)
    h *= np.float32(255.0 / 360.0)
    return Image(_to_u8(np.stack([h, s, v], axis=2)), "HSV8")


def to_grayscale(img: Image) -> Image:
    """Luma: Y = round(0.299 R + 0.587 G + 0.114 B)."""
    img.require("RGB8")
    rgb = img.data.astype(np.float64)
    y = rgb[:, :, 0] * 0.299 + rgb[:, :, 1] * 0.587 + rgb[:, :, 2] * 0.114
    return Image(_to_u8(y), "GRAY8")


def _hue_to_byte(deg: float) -> int:
    return int(_round_half_away(np.float64(deg * 255.0 / 360.0)))


def mask_in_range(img: Image, rng: HsvRange) -> Image:
    """Set-membership mask over byte HSV, hue comparison with wraparound."""
    img.require("HSV8")
    h = img.data[:, :, 0]
    s = img.data[:, :, 1]
    v = img.data[:, :, 2]
    h_lo, h_hi = _hue_to_byte(rng.hue_lo), _hue_to_byte(rng.hue_hi)
    if h_lo <= h_hi:
        h_ok = (h >= h_lo) & (h <= h_hi)
    else:
        h_ok = (h >= h_lo) | (h <= h_hi)
    s_lo = int(_round_half_away(np.float64(rng.sat_lo * 255.0)))
    s_hi = int(_round_half_away(np.float64(rng.sat_hi * 255.0)))
    v_lo = int(_round_half_away(np.float64(rng.val_lo * 255.0)))
    v_hi = int(_round_half_away(np.float64(rng.val_hi * 255.0)))
    ok = h_ok & (s >= s_lo) & (s <= s_hi) & (v >= v_lo) & (v <= v_hi)
    return Image(np.where(ok, 255, 0).astype(np.uint8), "MASK1")


# --- connected components ----------------------------------------------


class _UnionFind:
    def __init__(self):
        self.parent: list[int] = []

    def make(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _runs_of(row: np.ndarray) -> list[tuple[int, int]]:
    # half-open [start, stop) runs of set pixels in one row
    on = row != 0
    if not on.any():
        return []
    d = np.diff(on.astype(np.int8))
    starts = np.flatnonzero(d == 1) + 1
    stops = np.flatnonzero(d == -1) + 1
    if on[0]:
        starts = np.insert(starts, 0, 0)
    if on[-1]:
        stops = np.append(stops, len(row))
    return list(zip(starts.tolist(), stops.tolist()))


# clockwise in image coordinates (y down), starting east
_MOORE = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_DIR_INDEX = {d: i for i, d in enumerate(_MOORE)}


def _trace_boundary(mask: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore neighbourhood contour, clockwise from the topmost-leftmost pixel.

    The walk state (pixel, backtrack pixel) determines the next step, so
    the contour closes at the first repeated state.
    """
    h, w = mask.shape

    def on(x, y):
        return 0 <= x < w and 0 <= y < h and bool(mask[y, x])

    cur = start
    back = (start[0] - 1, start[1])  # west neighbour is off for a top-left start
    boundary = [cur]
    seen = {(cur, back)}
    for _ in range(8 * mask.size + 16):
        bidx = _DIR_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        nxt = None
        for k in range(1, 9):
            d = (bidx + k) % 8
            cand = (cur[0] + _MOORE[d][0], cur[1] + _MOORE[d][1])
            if on(*cand):
                nxt = cand
                break
            back = cand  # last off neighbour scanned becomes the backtrack
        if nxt is None:
            return boundary  # isolated pixel
        cur = nxt
        state = (cur, back)
        if state in seen:
            return boundary
        seen.add(state)
        boundary.append(cur)
    raise RuntimeError("boundary tracing failed to terminate")


def find_blobs(mask: Image, min_pixels: int = 1) -> list[Blob]:
    """8-connected components with centroids, boxes and traced boundaries.

    Components smaller than ``min_pixels`` are dropped; the result is
    sorted by area descending (ties by first pixel, row major).
    """
    mask.require("MASK1")
    if min_pixels < 1:
        raise ValueError("min_pixels must be >= 1")
    grid = mask.data
    h, w = grid.shape
    uf = _UnionFind()
    labels_prev: list[tuple[int, int, int]] = []  # (start, stop, label)
    rows: list[list[tuple[int, int, int]]] = []
    for y in range(h):
        runs = _runs_of(grid[y])
        labeled: list[tuple[int, int, int]] = []
        for start, stop in runs:
            lab = uf.make()
            # 8-connectivity: runs touching diagonally overlap when expanded by 1
            for pstart, pstop, plab in labels_prev:
                if pstart < stop + 1 and start < pstop + 1:
                    uf.union(lab, plab)
            labeled.append((start, stop, lab))
        rows.append(labeled)
        labels_prev = labeled

    stats: dict[int, list] = {}  # root -> [area, sx, sy, x0, y0, x1, y1, first]
    for y, labeled in enumerate(rows):
        for start, stop, lab in labeled:
            root = uf.find(lab)
            n = stop - start
            sx = (start + stop - 1) * n / 2.0
            st = stats.get(root)
            if st is None:
                stats[root] = [n, sx, float(y * n), start, y, stop - 1, y, (y, start)]
            else:
                st[0] += n
                st[1] += sx
                st[2] += y * n
                st[3] = min(st[3], start)
                st[5] = max(st[5], stop - 1)
                st[6] = y
    blobs = []
    on = grid != 0
    for st in stats.values():
        area, sx, sy, x0, y0, x1, y1, first = st
        if area < min_pixels:
            continue
        boundary = _trace_boundary(on, (first[1], first[0]))
        blobs.append(
            Blob(
                area=int(area),
                centroid=(sx / area, sy / area),
                bbox=(int(x0), int(y0), int(x1), int(y1)),
                boundary=tuple(boundary),
            )
        )
    blobs.sort(key=lambda b: (-b.area, b.bbox[1], b.bbox[0]))
    return blobs


# --- detection ---------------------------------------------------------


def locate_ball(
    frame: Image, params: VisionParams, cal: Calibration
) -> tuple[float, float, float]:
    """Recover the ball position in mm: blur -> HSV -> mask -> blobs.

    Returns (x_mm, y_mm, confidence) where confidence is the circularity
    of the accepted blob.  Raises BallNotFound when no component passes
    the area and circularity gates.
    """
    frame.require("RGB8")
    work = gaussian_blur(frame, params.blur_sigma) if params.blur_sigma > 0 else frame
    mask = mask_in_range(rgb_to_hsv(work), params.ball_range)
    for blob in find_blobs(mask, min_pixels=params.min_area_px):
        if blob.area > params.max_area_px:
            continue
        conf = blob.circularity()
        if conf >= params.min_circularity:
            x_mm, y_mm = cal.to_mm(*blob.centroid)
            return x_mm, y_mm, conf
    raise BallNotFound("no blob passes the area and circularity gates")


def calibrate_platform(frame: Image, scene: SceneConfig) -> Calibration:
    """Locate the dark platform square and freeze the pixel-to-mm map.

    The largest dark blob's bounding box gives the platform center; the
    scale comes from its width against the known platform extent.
    """
    gray = to_grayscale(frame)
    dark = Image(np.where(gray.data < 48, 255, 0).astype(np.uint8), "MASK1")
    blobs = find_blobs(dark, min_pixels=64)
    if not blobs:
        raise BallNotFound("no dark platform region in the frame")
    x0, y0, x1, y1 = blobs[0].bbox
    if x1 == x0:
        raise BallNotFound("platform region is degenerate")
    center = ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    # edge pixel centers sit on the physical platform edges, so the span
    # in mm maps to the centre-to-centre pixel gap
    scale = 2.0 * scene.plate_half_extent_mm / (x1 - x0)
    return Calibration(scale, center)


# --- file formats ------------------------------------------------------


def _read_header(data: bytes, magic: bytes):
    if not data.startswith(magic):
        raise ValueError(f"not a {magic.decode()} file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated header")
        fields.append(int(data[start:pos]))
    return fields[0], fields[1], fields[2], pos + 1


def write_ppm(img: Image) -> bytes:
    """Binary P6 bytes for an RGB8 image."""
    img.require("RGB8")
    header = f"P6\n{img.width} {img.height}\n255\n".encode()
    return header + img.data.tobytes()


def read_ppm(data: bytes) -> Image:
    w, h, maxval, off = _read_header(data, b"P6")
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    buf = data[off : off + w * h * 3]
    if len(buf) != w * h * 3:
        raise ValueError("pixel payload is truncated")
    return Image(np.frombuffer(buf, dtype=np.uint8).reshape(h, w, 3), "RGB8")


def write_pgm(img: Image) -> bytes:
    """Binary P5 bytes for a GRAY8 or MASK1 image."""
    if img.layout not in ("GRAY8", "MASK1"):
        raise LayoutError(f"P5 stores GRAY8 or MASK1, not {img.layout}")
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    return header + img.data.tobytes()


def read_pgm(data: bytes) -> Image:
    w, h, maxval, off = _read_header(data, b"P5")
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    buf = data[off : off + w * h]
    if len(buf) != w * h:
        raise ValueError("pixel payload is truncated")
    arr = np.frombuffer(buf, dtype=np.uint8).reshape(h, w)
    layout = "MASK1" if bool(np.isin(arr, (0, 255)).all()) else "GRAY8"
    return Image(arr, layout)
