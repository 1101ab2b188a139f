"""Stateless HTTP JSON service for the defense operations.

Privacy by architecture: the estimate endpoint receives exactly the
demographic triple, nothing is logged beyond coarse counters, and CCR uploads
are parsed from the request body in memory and discarded with the response.
Responses use the canonical JSON serialization (sorted keys, 6-significant-
digit floats) so they are byte-comparable with library and CLI output.
"""

from __future__ import annotations

import email.parser
import email.policy
import json

from fastapi import FastAPI, Request, Response
from starlette.middleware.cors import CORSMiddleware

from . import __version__
from .core import (
    BirthDate,
    DemographicKey,
    Gender,
    RefinementRequestedError,
    ValidationError,
    ZipCode,
    ZipLevel,
)
from .identifiability import canonical_json, parse_cell_key, risk_report
from .ingestion import PopulationTable
from .remediation import CcrEditMode, NotWellFormedError, ccr_set_birth, whatif

DEFAULT_UPLOAD_CAP = 10 * 1024 * 1024


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(canonical_json(payload), status_code=status_code, media_type="application/json")


def _error(status_code: int, code: str, message: str, field: str | None = None) -> Response:
    body = {"code": code, "message": message}
    if field is not None:
        body["field"] = field
    return _json_response(body, status_code)


class _FieldError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


def _parse_estimate_fields(body: dict):
    if not isinstance(body, dict):
        raise _FieldError("body", "request body must be a JSON object")

    def field_of(name, required=True):
        value = body.get(name)
        if value is None:
            if required:
                raise _FieldError(name, f"missing required field {name!r}")
            return None
        return value

    try:
        zip_code = ZipCode(str(field_of("zip")).strip())
    except ValidationError as exc:
        raise _FieldError("zip", str(exc)) from None
    if zip_code.level is not ZipLevel.ZIP5:
        raise _FieldError("zip", "zip must be exactly 5 digits")
    try:
        gender = Gender.parse(str(field_of("gender")))
    except ValidationError as exc:
        raise _FieldError("gender", str(exc)) from None
    try:
        birth = BirthDate.parse(str(field_of("dob")))
    except ValidationError as exc:
        raise _FieldError("dob", str(exc)) from None
    window = field_of("window", required=False)
    if window is not None:
        if not isinstance(window, int) or isinstance(window, bool) or window < 1:
            raise _FieldError("window", "window must be an integer >= 1")
    as_of_year = field_of("as_of_year", required=False)
    if as_of_year is not None and (not isinstance(as_of_year, int) or isinstance(as_of_year, bool)):
        raise _FieldError("as_of_year", "as_of_year must be an integer")
    return zip_code, gender, birth, window, as_of_year


def _parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    """Parse multipart/form-data in memory with the stdlib email machinery."""
    message = email.parser.BytesParser(policy=email.policy.HTTP).parsebytes(
        b"Content-Type: " + content_type.encode("latin-1") + b"\r\n\r\n" + body
    )
    if not message.is_multipart():
        raise ValidationError("expected multipart/form-data")
    fields: dict[str, bytes] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name is None:
            continue
        payload = part.get_payload(decode=True)
        fields[str(name)] = payload if payload is not None else b""
    return fields


def create_app(
    table: PopulationTable | None,
    cors_origins: list[str] | None = None,
    upload_cap: int = DEFAULT_UPLOAD_CAP,
    version: str = __version__,
    static_dir: str | None = None,
) -> FastAPI:
    """Build the service around an already-loaded population table.

    The table is the only shared state and it is read-only; request handling
    never mutates anything, so any request sequence replays identically.
    """
    app = FastAPI(title="reidkit risk service", version=version, docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins if cors_origins else ["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
        expose_headers=["X-Scrub-Summary"],
    )

    @app.get("/api/health")
    async def health():
        return _json_response({
            "status": "ok",
            "population_table": "loaded" if table is not None else "missing",
            "version": version,
        })

    async def read_json(request: Request) -> dict | Response:
        try:
            return json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "bad-json", "request body is not valid JSON")

    @app.post("/api/estimate")
    async def estimate(request: Request):
        if table is None:
            return _error(503, "table-missing", "population table not loaded")
        body = await read_json(request)
        if isinstance(body, Response):
            return body
        try:
            zip_code, gender, birth, window, as_of_year = _parse_estimate_fields(body)
        except _FieldError as exc:
            return _error(400, "invalid-demographics", str(exc), exc.field)
        report = risk_report(zip_code, gender, birth, table, window, as_of_year)
        return _json_response(report.to_dict())

    @app.post("/api/whatif")
    async def whatif_endpoint(request: Request):
        if table is None:
            return _error(503, "table-missing", "population table not loaded")
        body = await read_json(request)
        if isinstance(body, Response):
            return body
        try:
            zip_code, gender, birth, window, as_of_year = _parse_estimate_fields(body)
        except _FieldError as exc:
            return _error(400, "invalid-demographics", str(exc), exc.field)
        birth_level = zip_level = None
        try:
            if body.get("birth_level") is not None:
                birth_level, _ = parse_cell_key(f"{body['birth_level']}/Zip5")
        except ValidationError:
            return _error(400, "invalid-level", f"unknown birth level {body['birth_level']!r}", "birth_level")
        try:
            if body.get("zip_level") is not None:
                _, zip_level = parse_cell_key(f"Full/{body['zip_level']}")
        except ValidationError:
            return _error(400, "invalid-level", f"unknown zip level {body['zip_level']!r}", "zip_level")
        key = DemographicKey(birth, gender, zip_code)
        try:
            pair = whatif(key, table, window, birth_level, zip_level, as_of_year)
        except RefinementRequestedError as exc:
            return _error(400, "refinement-requested", str(exc))
        return _json_response({"before": pair.before.to_dict(), "after": pair.after.to_dict()})

    @app.post("/api/ccr/scrub")
    async def scrub(request: Request):
        body = await request.body()
        if len(body) > upload_cap:
            return _error(413, "too-large", f"upload exceeds {upload_cap} bytes")
        content_type = request.headers.get("content-type", "")
        if not content_type.lower().startswith("multipart/form-data"):
            return _error(400, "bad-request", "expected multipart/form-data", "file")
        try:
            fields = _parse_multipart(content_type, body)
        except ValidationError as exc:
            return _error(400, "bad-request", str(exc), "file")
        if "file" not in fields:
            return _error(400, "bad-request", "missing file part", "file")
        mode_token = fields.get("mode", b"").decode("utf-8", "replace").strip()
        try:
            mode = CcrEditMode(mode_token)
        except ValueError:
            return _error(400, "bad-mode", f"mode must be 'year' or 'remove', got {mode_token!r}", "mode")
        try:
            result = ccr_set_birth(fields["file"], mode)
        except NotWellFormedError as exc:
            return _error(400, "not-well-formed", str(exc), "file")
        return Response(
            result.document,
            media_type="application/xml",
            headers={"X-Scrub-Summary": canonical_json(result.summary())},
        )

    if static_dir is not None:
        from starlette.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
