import multiprocessing
import os

from dotenv import load_dotenv

load_dotenv(override=True)

max_requests = 1000
max_requests_jitter = 50
log_file = "-"
bind = "0.0.0.0:50505"
wsgi_app = "anwfit:create_app()"

if not os.getenv("RUNNING_IN_PRODUCTION"):
    reload = True

workers = multiprocessing.cpu_count()
worker_class = "uvicorn.workers.UvicornWorker"

# grid-search tuning of a large dataset runs inside one request
timeout = 600
