#!/usr/bin/env python3
"""Fetch the benchmark datasets and convert them to CSV.

The seven classification sets (DNA, Ionosphere, Pima, Satellite, Sonar,
Vehicle, Vowel) are distributed in the R package `mlbench` on CRAN.  This
script downloads the package source tarball, reads the .rda data files with
a minimal reader for the R serialization format (no R installation needed),
and writes one CSV per set into the output directory.

Pima is exported as its complete-case subset (392 rows): the 768-row
original encodes missing values as NA and the classifier rejects missing
cells by design.

Factor levels that look numeric (e.g. the "0"/"1" levels of the DNA
indicator attributes) are prefixed with "f" so that CSV type inference
keeps them categorical, as they are in the R source data.

Usage:
    python3 scripts/fetch_datasets.py [--out data] [--mirror URL]

The default mirror is https://cran.r-project.org; point --mirror (or the
CRAN_MIRROR environment variable) at any CRAN mirror.
"""

import argparse
import bz2
import gzip
import io
import lzma
import math
import os
import struct
import sys
import tarfile
import urllib.request

MLBENCH_VERSIONS = ["2.1-6", "2.1-3.1", "2.1-3", "2.1-8"]

# dataset name in mlbench -> (output file stem, decision column)
DATASETS = {
    "DNA": ("dna", "Class"),
    "Ionosphere": ("ion", "Class"),
    "PimaIndiansDiabetes2": ("pim", "diabetes"),
    "Satellite": ("sat", "classes"),
    "Sonar": ("son", "Class"),
    "Vehicle": ("veh", "Class"),
    "Vowel": ("vow", "Class"),
}

R_INT_NA = -2147483648


class RdaReader:
    """Minimal reader for the XDR R serialization format (RDX2/RDX3).

    Supports the node types that occur in plain data.frame .rda files:
    pairlists, symbols, character/logical/integer/real/string/generic
    vectors and reference lookups.
    """

    def __init__(self, data: bytes):
        self.buf = data
        self.pos = 0
        self.refs = []

    def read_int(self) -> int:
        v = struct.unpack_from(">i", self.buf, self.pos)[0]
        self.pos += 4
        return v

    def read_ints(self, n):
        vals = struct.unpack_from(">%di" % n, self.buf, self.pos)
        self.pos += 4 * n
        return list(vals)

    def read_reals(self, n):
        vals = struct.unpack_from(">%dd" % n, self.buf, self.pos)
        self.pos += 8 * n
        return list(vals)

    def parse(self):
        magic = self.buf[self.pos:self.pos + 5]
        if magic not in (b"RDX2\n", b"RDX3\n"):
            raise ValueError("not an XDR .rda stream: %r" % magic)
        self.pos += 5
        if self.buf[self.pos:self.pos + 2] != b"X\n":
            raise ValueError("only XDR-format .rda files are supported")
        self.pos += 2
        version = self.read_int()
        self.read_int()  # writer R version
        self.read_int()  # minimal reader R version
        if version >= 3:
            enc_len = self.read_int()
            self.pos += enc_len  # native encoding name
        return self.read_item()

    def read_item(self):
        flags = self.read_int()
        sexp_type = flags & 0xFF
        has_attr = bool(flags & 0x200)
        has_tag = bool(flags & 0x400)

        if sexp_type == 254:  # NILVALUE
            return None
        if sexp_type == 255:  # REFSXP
            idx = flags >> 8
            if idx == 0:
                idx = self.read_int()
            return self.refs[idx - 1]
        if sexp_type == 1:  # SYMSXP
            name = self.read_item()  # CHARSXP
            sym = ("symbol", name)
            self.refs.append(sym)
            return sym
        if sexp_type == 2:  # LISTSXP (pairlist node)
            attrs = self.read_item() if has_attr else None
            tag = self.read_item() if has_tag else None
            car = self.read_item()
            cdr = self.read_item()
            return ("pairlist", tag, car, cdr, attrs)
        if sexp_type == 9:  # CHARSXP
            n = self.read_int()
            if n == -1:
                return None
            raw = self.buf[self.pos:self.pos + n]
            self.pos += n
            return raw.decode("utf-8", "replace")
        if sexp_type in (10, 13):  # LGLSXP, INTSXP
            n = self.read_int()
            vals = self.read_ints(n)
            kind = "logical" if sexp_type == 10 else "int"
            return self.finish_vector(kind, vals, has_attr)
        if sexp_type == 14:  # REALSXP
            n = self.read_int()
            return self.finish_vector("real", self.read_reals(n), has_attr)
        if sexp_type == 16:  # STRSXP
            n = self.read_int()
            vals = [self.read_item() for _ in range(n)]
            return self.finish_vector("str", vals, has_attr)
        if sexp_type in (19, 20):  # VECSXP, EXPRSXP
            n = self.read_int()
            vals = [self.read_item() for _ in range(n)]
            return self.finish_vector("vec", vals, has_attr)
        raise ValueError("unsupported SEXP type %d at offset %d"
                         % (sexp_type, self.pos - 4))

    def finish_vector(self, kind, vals, has_attr):
        attrs = {}
        if has_attr:
            node = self.read_item()
            while node is not None:
                _, tag, car, cdr, _ = node
                if tag is not None and tag[0] == "symbol":
                    attrs[tag[1]] = car
                node = cdr
        return ("vector", kind, vals, attrs)


def vector_payload(obj):
    if obj is None or obj[0] != "vector":
        raise ValueError("expected a vector, got %r" % (obj,))
    return obj[1], obj[2], obj[3]


def column_cells(col):
    """One .rda column -> list of CSV cell strings (None marks NA)."""
    kind, vals, attrs = vector_payload(col)
    classes = []
    if "class" in attrs:
        classes = vector_payload(attrs["class"])[1]
    if "factor" in classes:
        levels = vector_payload(attrs["levels"])[1]
        prefix = "f" if all(is_number(lv) for lv in levels) else ""
        return [None if v == R_INT_NA else prefix + levels[v - 1] for v in vals]
    if kind == "real":
        return [None if math.isnan(v) else format_real(v) for v in vals]
    if kind == "int":
        return [None if v == R_INT_NA else str(v) for v in vals]
    if kind == "logical":
        return [None if v == R_INT_NA else ("TRUE" if v else "FALSE")
                for v in vals]
    if kind == "str":
        return vals
    raise ValueError("unsupported column kind: %s" % kind)


def is_number(s) -> bool:
    try:
        float(s)
        return True
    except (TypeError, ValueError):
        return False


def format_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def decompress(raw: bytes) -> bytes:
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    if raw[:3] == b"BZh":
        return bz2.decompress(raw)
    if raw[:6] == b"\xfd7zXZ\x00":
        return lzma.decompress(raw)
    return raw


def data_frame_to_csv(frame, path, decision_column):
    kind, cols, attrs = vector_payload(frame)
    if kind != "vec":
        raise ValueError("expected a data.frame")
    names = vector_payload(attrs["names"])[1]
    if decision_column not in names:
        raise ValueError("decision column %r not in %r" % (decision_column, names))
    cells = [column_cells(c) for c in cols]
    n_rows = len(cells[0])

    # decision column goes last for readability
    order = [i for i, nm in enumerate(names) if nm != decision_column]
    order.append(names.index(decision_column))

    kept = 0
    with open(path, "w", newline="") as out:
        out.write(",".join(quote(names[i]) for i in order) + "\n")
        for r in range(n_rows):
            row = [cells[i][r] for i in order]
            if any(v is None for v in row):
                continue  # complete cases only
            out.write(",".join(quote(v) for v in row) + "\n")
            kept += 1
    return kept, len(order) - 1


def quote(cell: str) -> str:
    if any(ch in cell for ch in ',"\n\r'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def fetch_tarball(mirror: str) -> bytes:
    last_err = None
    for version in MLBENCH_VERSIONS:
        url = "%s/src/contrib/mlbench_%s.tar.gz" % (mirror.rstrip("/"), version)
        try:
            with urllib.request.urlopen(url, timeout=120) as resp:
                return resp.read()
        except Exception as err:  # try the next published version
            last_err = err
    raise RuntimeError("could not download mlbench from %s: %s" % (mirror, last_err))


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="data", help="output directory (default: data)")
    ap.add_argument("--mirror", default=os.environ.get("CRAN_MIRROR",
                                                       "https://cran.r-project.org"),
                    help="CRAN mirror base URL")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    print("downloading mlbench from %s ..." % args.mirror)
    tarball = fetch_tarball(args.mirror)

    with tarfile.open(fileobj=io.BytesIO(tarball), mode="r:gz") as tar:
        for dataset, (stem, decision) in sorted(DATASETS.items()):
            member = tar.getmember("mlbench/data/%s.rda" % dataset)
            raw = tar.extractfile(member).read()
            top = RdaReader(decompress(raw)).parse()
            # top level is a pairlist of (name, object) entries
            frame = None
            node = top
            while node is not None:
                _, tag, car, cdr, _ = node
                if tag is not None and tag[1] == dataset:
                    frame = car
                node = cdr
            if frame is None:
                raise RuntimeError("object %s not found in %s.rda" % (dataset, dataset))
            out_path = os.path.join(args.out, stem + ".csv")
            rows, attrs = data_frame_to_csv(frame, out_path, decision)
            print("  %s.csv: %d rows x %d attributes (+ %s)"
                  % (stem, rows, attrs, decision))
    print("done.")


if __name__ == "__main__":
    sys.exit(main())
