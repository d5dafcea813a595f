# app/tests/conftest.py
import os

from dotenv import load_dotenv


def pytest_configure():
    """Pytest hook that runs before any tests; load .env.test from the repo root."""
    env_file_path = os.path.join(
        os.path.dirname(os.path.dirname(os.path.dirname(__file__))), ".env.test"
    )
    if not os.path.exists(env_file_path):
        print(f"WARNING: {env_file_path} not found!")
    else:
        print(f"INFO: Loading env vars from {env_file_path}")
    load_dotenv(dotenv_path=env_file_path, override=True)
    os.environ["APP_ENV"] = "test"
