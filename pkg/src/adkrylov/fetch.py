"""Download SuiteSparse Matrix Market archives into a local cache.

The cache layout is ``<cache_dir>/<group>/<name>.mtx``.  A cached file is
returned without touching the network.  Concurrent fetches of the same file
are serialized with a lock file next to the target.
"""

from __future__ import annotations

import hashlib
import io
import logging
import os
import tarfile
import urllib.error
import urllib.request
import warnings
from pathlib import Path

from filelock import FileLock

from .errors import ArchiveFormatError, CacheConflictWarning, FetchError

__all__ = [
    "DEFAULT_BASE_URL",
    "resolve_cache_dir",
    "resolve_base_url",
    "archive_url",
    "urllib_transport",
    "fetch_matrix",
    "cached_path",
]

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://suitesparse-collection-website.herokuapp.com"
CACHE_ENV = "ADKRYLOV_CACHE"
BASE_URL_ENV = "ADKRYLOV_BASE_URL"


def resolve_cache_dir(explicit=None) -> Path:
    """Explicit argument, then $ADKRYLOV_CACHE, then the user cache directory."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "adkrylov"


def resolve_base_url(explicit=None) -> str:
    return (explicit or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")


def archive_url(base_url, group, name):
    return f"{base_url}/MM/{group}/{name}.tar.gz"


def cached_path(cache_dir, group, name) -> Path:
    return Path(cache_dir) / group / f"{name}.mtx"


def urllib_transport(url, timeout=60) -> bytes:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as exc:
        raise FetchError(f"GET {url} failed with HTTP {exc.code}", status=exc.code) from exc
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(f"GET {url} failed: {exc}") from exc


def _extract_mtx(blob, name):
    try:
        with tarfile.open(fileobj=io.BytesIO(blob), mode="r:*") as tar:
            for member in tar.getmembers():
                if member.isfile() and os.path.basename(member.name) == f"{name}.mtx":
                    return tar.extractfile(member).read()
    except tarfile.TarError as exc:
        raise ArchiveFormatError(f"cannot read archive for {name}: {exc}") from exc
    raise ArchiveFormatError(f"archive for {name} contains no {name}.mtx")


def fetch_matrix(group, name, cache_dir=None, base_url=None, transport=None,
                 force=False) -> Path:
    """Return the path of ``<name>.mtx``, downloading it if not cached.

    ``transport(url) -> bytes`` performs the HTTP GET and may be replaced in
    tests.  With ``force=True`` the archive is downloaded again; if the new
    file differs from the cached one a :class:`CacheConflictWarning` is issued
    and the new file replaces the old.
    """
    cache_dir = resolve_cache_dir(cache_dir)
    target = cached_path(cache_dir, group, name)
    target.parent.mkdir(parents=True, exist_ok=True)
    transport = transport or urllib_transport
    with FileLock(str(target) + ".lock"):
        if target.exists() and not force:
            return target
        url = archive_url(resolve_base_url(base_url), group, name)
        log.info("downloading %s", url)
        data = _extract_mtx(transport(url), name)
        if target.exists():
            old = hashlib.sha256(target.read_bytes()).hexdigest()
            new = hashlib.sha256(data).hexdigest()
            if old != new:
                warnings.warn(
                    f"re-downloaded {group}/{name} differs from the cached copy "
                    f"({len(data)} vs {target.stat().st_size} bytes)",
                    CacheConflictWarning, stacklevel=2)
        tmp = target.with_suffix(".mtx.part")
        tmp.write_bytes(data)
        os.replace(tmp, target)
    return target
