"""Launch the assessment service for frontend round-trip tests.

Usage: python3 scripts/run-service.py PORT [TIME_SCALE]
"""

import sys
from dataclasses import replace

import uvicorn

from cogload.core import ServiceSettings, SessionConfig, default_layout
from cogload.service import create_app

port = int(sys.argv[1])
time_scale = float(sys.argv[2]) if len(sys.argv) > 2 else 10.0
config = replace(
    SessionConfig(),
    service=ServiceSettings(feedback_hz=20.0, sim_time_scale=time_scale),
)
app = create_app(config, default_layout())
uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
