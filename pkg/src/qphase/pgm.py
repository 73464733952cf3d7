"""Minimal reader/writer for grayscale Netpbm (PGM) images, ASCII ``P2`` and
binary ``P5`` (8- or 16-bit)."""
import numpy as np

from .errors import PGMParseError


class _Tokens:
    """Header tokenizer that skips whitespace and ``#`` comments."""

    def __init__(self, data, pos=0):
        self.data = data
        self.pos = pos

    def _skip(self):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos]
            if c in b" \t\r\n\v\f":
                self.pos += 1
            elif c == ord("#"):
                while self.pos < len(d) and d[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                break

    def next(self, what):
        self._skip()
        start = self.pos
        d = self.data
        while self.pos < len(d) and d[self.pos] not in b" \t\r\n\v\f#":
            self.pos += 1
        if start == self.pos:
            raise PGMParseError(f"unexpected end of file while reading {what}", start)
        return d[start:self.pos], start

    def next_int(self, what):
        tok, at = self.next(what)
        try:
            return int(tok), at
        except ValueError:
            raise PGMParseError(f"expected integer {what}, got {tok[:20]!r}", at) from None


def parse_pgm(data):
    """Decode PGM bytes into ``(pixels (h, w) int array, maxval)``."""
    if len(data) < 2 or data[:1] != b"P" or data[1:2] not in (b"2", b"5"):
        raise PGMParseError("not a PGM file (magic must be P2 or P5)", 0)
    binary = data[1:2] == b"5"
    tok = _Tokens(data, 2)
    width, at_w = tok.next_int("width")
    height, at_h = tok.next_int("height")
    maxval, at_m = tok.next_int("maxval")
    if width < 1:
        raise PGMParseError(f"invalid width {width}", at_w)
    if height < 1:
        raise PGMParseError(f"invalid height {height}", at_h)
    if not 1 <= maxval <= 65535:
        raise PGMParseError(f"maxval {maxval} outside 1..65535", at_m)
    n = width * height
    if binary:
        # exactly one whitespace byte separates the header from the raster
        if tok.pos >= len(data) or data[tok.pos] not in b" \t\r\n\v\f":
            raise PGMParseError("missing whitespace after maxval", tok.pos)
        start = tok.pos + 1
        bpp = 1 if maxval < 256 else 2
        need = n * bpp
        if len(data) - start < need:
            raise PGMParseError(f"truncated raster: need {need} bytes, have {len(data) - start}",
                                len(data))
        dtype = np.uint8 if bpp == 1 else np.dtype(">u2")
        pix = np.frombuffer(data, dtype=dtype, count=n, offset=start).astype(np.int64)
    else:
        pix = np.empty(n, dtype=np.int64)
        for i in range(n):
            pix[i], _ = tok.next_int(f"pixel {i}")
    if pix.size and pix.max() > maxval:
        raise PGMParseError(f"pixel value {int(pix.max())} exceeds maxval {maxval}")
    if np.any(pix < 0):
        raise PGMParseError("negative pixel value")
    return pix.reshape(height, width), maxval


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_pgm(data)


def write_pgm(path, pixels, maxval=255):
    """Write an integer array ``(h, w)`` as ASCII P2."""
    pixels = np.asarray(pixels)
    h, w = pixels.shape
    lines = ["P2", f"{w} {h}", str(int(maxval))]
    for row in pixels:
        lines.append(" ".join(str(int(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
