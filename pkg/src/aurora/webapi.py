"""HTTP surface over IssueService.

Routes: the issue pages (/timeline/current, /timeline/{id}), the JSON API
(/api/issue/{id}, /api/events, /api/session) and /healthz. Sessions ride the
``at_session`` cookie; the first visit assigns the interface condition.
"""

from __future__ import annotations

import os
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import ServiceError
from .service import IssueService, Session

SESSION_COOKIE = "at_session"

_STATUS = {
    "NOT_FOUND": 404,
    "BAD_LOCATION": 400,
    "BAD_EVENT": 400,
    "UNAUTHENTICATED": 401,
}

_PAGE = """<!DOCTYPE html>
<html lang="es">
<head>
<meta charset="utf-8">
<title>Aurora Twittera</title>
<link rel="stylesheet" href="/static/app.css">
</head>
<body>
<div id="app" data-issue="{issue_ref}" data-condition="{condition}"></div>
{script}
</body>
</html>
"""

_MINIMAL_PAGE = """<!DOCTYPE html>
<html lang="es">
<head><meta charset="utf-8"><title>Aurora Twittera</title></head>
<body>
<p>Versión simplificada para móviles.</p>
<ul>{items}</ul>
</body>
</html>
"""


def create_app(service: IssueService, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="aurora", docs_url=None, redoc_url=None)
    if static_dir and os.path.isdir(static_dir):
        app.mount("/static", StaticFiles(directory=static_dir), name="static")
        script = '<script type="module" src="/static/app.js"></script>'
    else:
        script = "<!-- no client bundle configured -->"

    def open_session(request: Request, response: Response) -> Session:
        session, created = service.open_session(
            cookie=request.cookies.get(SESSION_COOKIE),
            user_agent=request.headers.get("user-agent", ""),
            ip=(request.client.host if request.client else ""),
        )
        if created:
            response.set_cookie(SESSION_COOKIE, session.session_id, httponly=True)
        return session

    def error_response(exc: ServiceError) -> JSONResponse:
        return JSONResponse(status_code=_STATUS.get(exc.code, 500),
                            content={"error": exc.code, "detail": str(exc)})

    @app.exception_handler(ServiceError)
    async def _service_error(_request, exc: ServiceError):
        return error_response(exc)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/timeline/{ref}", response_class=HTMLResponse)
    def timeline_page(ref: str, request: Request, response: Response):
        session = open_session(request, response)
        payload = service.get_issue(ref, session_id=session.session_id)
        if session.user_agent_class == "mobile":
            items = "".join(f"<li>{p['author']}: {p['text']}</li>" for p in payload["posts"])
            return _MINIMAL_PAGE.format(items=items)
        return _PAGE.format(issue_ref=payload["issue_id"],
                            condition=session.condition, script=script)

    @app.get("/api/session")
    def session_info(request: Request, response: Response):
        session = open_session(request, response)
        return {
            "session_id": session.session_id,
            "condition": session.condition,
            "group": session.group,
        }

    @app.get("/api/issue/{ref}")
    def issue_payload(ref: str, request: Request, response: Response,
                      loc: Optional[str] = None):
        session = open_session(request, response)
        return service.get_issue(ref, loc=loc, session_id=session.session_id)

    @app.post("/api/events")
    async def post_event(request: Request):
        body = await request.json()
        session_id = request.cookies.get(SESSION_COOKIE) or body.get("session_id")
        if not session_id:
            raise ServiceError("UNAUTHENTICATED", "no session cookie")
        event = service.record_event(
            session_id,
            str(body.get("event_type", "")),
            issue_id=body.get("issue_id"),
            target=body.get("target"),
            client_ts=body.get("client_ts"),
        )
        return {"seq": event.seq}

    return app
