"""Newline-delimited JSON server for the classifier protocol.

Request:  {"signature": "...", "source_code": "..."}
Response: {"category": "...", "confidence": 0.0-1.0, "validated": true|false}
Malformed requests get {"error": "..."}; every request line yields exactly
one response line, never silence.

Modes: ``--stdio`` (speak over stdin/stdout) or ``--listen PATH`` (unix
socket, one client at a time; classification is off the scan hot path).
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from typing import Optional, TextIO

from .codebase import ModelUnavailable, load_codebase
from .service import (
    ClassifierService,
    ValidatorTimeout,
    confirm_validator,
    reject_validator,
)

_VALIDATORS = {
    "passthrough": None,
    "confirm": confirm_validator,
    "reject": reject_validator,
}


def handle_line(service: ClassifierService, line: str) -> str:
    line = line.strip()
    if not line:
        return json.dumps({"error": "empty request"})
    try:
        doc = json.loads(line)
        signature = str(doc["signature"])
        source_code = str(doc.get("source_code", ""))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        return json.dumps({"error": f"malformed request: {exc}"})
    try:
        reply = service.classify(signature, source_code)
    except ModelUnavailable as exc:
        return json.dumps({"error": f"model unavailable: {exc}"})
    except ValidatorTimeout as exc:
        return json.dumps({"error": f"validator timeout: {exc}"})
    return json.dumps(reply)


def serve_stream(service: ClassifierService, inp: TextIO, out: TextIO) -> None:
    for line in inp:
        out.write(handle_line(service, line) + "\n")
        out.flush()


def serve_unix(service: ClassifierService, path: str) -> None:
    if os.path.exists(path):
        os.unlink(path)
    server = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
    server.bind(path)
    server.listen(1)
    print(f"listening on {path}", file=sys.stderr)
    try:
        while True:
            conn, _ = server.accept()
            with conn:
                fh = conn.makefile("rw", encoding="utf-8", newline="\n")
                serve_stream(service, fh, fh)
    finally:
        server.close()
        if os.path.exists(path):
            os.unlink(path)


def main(argv: Optional[list] = None) -> int:
    ap = argparse.ArgumentParser(prog="cascade-sidecar",
                                 description="code-similarity classifier sidecar")
    ap.add_argument("--codebase", required=True,
                    help="reference codebase JSONL of {category, snippet}")
    ap.add_argument("--stdio", action="store_true", help="serve over stdin/stdout")
    ap.add_argument("--listen", default=None, help="serve on a unix socket path")
    ap.add_argument("--validator", choices=sorted(_VALIDATORS), default="passthrough",
                    help="validation policy; 'reject' and 'confirm' are "
                         "scripted fixtures for testing")
    ap.add_argument("--min-similarity", type=float, default=0.5,
                    help="distrust nearest matches below this similarity")
    ap.add_argument("--validator-timeout", type=float, default=30.0)
    args = ap.parse_args(argv)

    if not args.stdio and not args.listen:
        ap.error("choose --stdio or --listen PATH")
    try:
        codebase = load_codebase(args.codebase)
    except (OSError, ModelUnavailable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    service = ClassifierService(
        codebase=codebase,
        validator=_VALIDATORS[args.validator],
        min_similarity=args.min_similarity,
        validator_timeout_s=args.validator_timeout,
    )
    if args.stdio:
        serve_stream(service, sys.stdin, sys.stdout)
        return 0
    serve_unix(service, args.listen)
    return 0


def console() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console()
