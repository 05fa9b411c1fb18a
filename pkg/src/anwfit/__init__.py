__version__ = "1.0.0"

from dotenv import load_dotenv  # noqa: E402
from quart import Quart  # noqa: E402

from .config import configure_logging  # noqa: E402


def create_app(testing=False):
    # gunicorn.conf.py loads .env too, but the app is not always served by gunicorn
    if not testing:
        load_dotenv(override=True)

    configure_logging()

    app = Quart(__name__)

    from . import api  # noqa

    app.register_blueprint(api.bp)

    return app
