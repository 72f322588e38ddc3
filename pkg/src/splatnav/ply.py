"""Binary PLY I/O for gaussian splat clouds.

Follows the de-facto 3DGS export layout: float32 properties
x, y, z, [nx, ny, nz], f_dc_0..2, f_rest_0..(3(K-1)-1), opacity,
scale_0..2, rot_0..3, binary little-endian. Normals are skipped on read and
never written. f_rest is channel-major: all red coefficients 1..K-1, then
green, then blue.
"""

import numpy as np

from .cloud import GaussianCloud, sh_degree_from_coeff_count
from .errors import PlyParseError, UnsupportedLayoutError

_REST_COUNT_TO_DEGREE = {0: 0, 9: 1, 24: 2, 45: 3}


def _read_header(f):
    lines = []
    while True:
        raw = f.readline()
        if not raw:
            raise PlyParseError("unexpected end of file before 'end_header'")
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise PlyParseError(f"non-ascii bytes in header line {len(lines) + 1}") from None
        lines.append(line)
        if line == "end_header":
            return lines


def _parse_header(lines):
    if not lines or lines[0] != "ply":
        raise PlyParseError(f"first header line is {lines[0]!r}, expected 'ply'")
    fmt = lines[1] if len(lines) > 1 else ""
    if fmt != "format binary_little_endian 1.0":
        raise PlyParseError(f"unsupported format line {fmt!r}; only binary_little_endian 1.0 is handled")

    n_vertices = None
    properties = []
    in_vertex = False
    for line in lines[2:]:
        if line.startswith("comment") or line == "end_header" or not line:
            continue
        parts = line.split()
        if parts[0] == "element":
            if parts[1] == "vertex":
                if len(parts) != 3:
                    raise PlyParseError(f"malformed element line {line!r}")
                try:
                    n_vertices = int(parts[2])
                except ValueError:
                    raise PlyParseError(f"bad vertex count in line {line!r}") from None
                in_vertex = True
            elif n_vertices is None:
                raise PlyParseError(f"element {parts[1]!r} precedes the vertex element; cannot locate payload")
            else:
                in_vertex = False
        elif parts[0] == "property":
            if not in_vertex:
                continue
            if len(parts) != 3:
                raise PlyParseError(f"malformed property line {line!r}")
            ptype, pname = parts[1], parts[2]
            if ptype not in ("float", "float32"):
                raise PlyParseError(f"property {pname!r} has type {ptype!r}; only float32 is handled")
            properties.append(pname)
        else:
            raise PlyParseError(f"unrecognized header line {line!r}")
    if n_vertices is None:
        raise PlyParseError("header declares no vertex element")
    return n_vertices, properties


def load_gaussian_ply(path):
    """Load a 3DGS PLY file into a validated GaussianCloud (float32 payload)."""
    with open(path, "rb") as f:
        lines = _read_header(f)
        n, props = _parse_header(lines)
        data = f.read(n * len(props) * 4)
    if len(data) != n * len(props) * 4:
        raise PlyParseError(f"payload truncated: expected {n * len(props) * 4} bytes, got {len(data)}")
    table = np.frombuffer(data, dtype="<f4").reshape(n, len(props)) if props else np.zeros((n, 0), "<f4")

    col = {name: i for i, name in enumerate(props)}
    required = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    missing = [r for r in required if r not in col]
    if missing:
        raise UnsupportedLayoutError(f"missing required properties: {missing}")

    rest_names = [p for p in props if p.startswith("f_rest_")]
    n_rest = len(rest_names)
    if n_rest not in _REST_COUNT_TO_DEGREE:
        raise UnsupportedLayoutError(
            f"{n_rest} f_rest properties match no SH degree; expected one of {sorted(_REST_COUNT_TO_DEGREE)}"
        )
    expected = [f"f_rest_{i}" for i in range(n_rest)]
    if sorted(rest_names, key=lambda s: int(s.rsplit("_", 1)[1])) != expected:
        raise UnsupportedLayoutError("f_rest properties are not a contiguous 0-based sequence")
    degree = _REST_COUNT_TO_DEGREE[n_rest]
    k = (degree + 1) ** 2

    def cols(names):
        return table[:, [col[name] for name in names]]

    positions = cols(["x", "y", "z"]).copy()
    f_dc = cols(["f_dc_0", "f_dc_1", "f_dc_2"])
    sh = np.zeros((n, k, 3), dtype=np.float32)
    sh[:, 0, :] = f_dc
    if n_rest:
        rest = cols(expected).reshape(n, 3, k - 1)  # channel-major on disk
        sh[:, 1:, :] = rest.transpose(0, 2, 1)
    opacities = table[:, col["opacity"]].copy()
    log_scales = cols(["scale_0", "scale_1", "scale_2"]).copy()
    rotations = cols(["rot_0", "rot_1", "rot_2", "rot_3"]).copy()

    cloud = GaussianCloud(positions, sh, opacities, log_scales, rotations)
    return cloud.validate()


def save_gaussian_ply(cloud, path):
    """Write a cloud as binary little-endian PLY, loadable by load_gaussian_ply."""
    n = cloud.n
    k = cloud.sh_coeffs.shape[1]
    sh_degree_from_coeff_count(k)
    n_rest = 3 * (k - 1)

    names = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"]
    names += [f"f_rest_{i}" for i in range(n_rest)]
    names += ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    header = "ply\nformat binary_little_endian 1.0\n"
    header += f"element vertex {n}\n"
    header += "".join(f"property float {name}\n" for name in names)
    header += "end_header\n"

    table = np.empty((n, len(names)), dtype="<f4")
    table[:, 0:3] = cloud.positions
    table[:, 3:6] = cloud.sh_coeffs[:, 0, :]
    if n_rest:
        table[:, 6:6 + n_rest] = cloud.sh_coeffs[:, 1:, :].transpose(0, 2, 1).reshape(n, n_rest)
    base = 6 + n_rest
    table[:, base] = cloud.opacities
    table[:, base + 1:base + 4] = cloud.log_scales
    table[:, base + 4:base + 8] = cloud.rotations

    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(table.tobytes())
