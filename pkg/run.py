import os
import sys

from harness.cli import main as cli_main


def check_env():
    if not os.path.exists(".env"):
        with open(".env", "w") as f:
            f.write("MODVIS_CACHE_DIR=.modvis_cache\n")
            f.write("MODVIS_CURVE_FILE=data/curves.jsonl\n")
            f.write("MODVIS_THREADS=1\n")
            f.write("MODVIS_LOG_LEVEL=INFO\n")
            f.write("MODVIS_MAX_DIM=4000\n")
            f.write("MODVIS_EIGEN_BOUND=50\n")
            f.write("MODVIS_MAX_HECKE=2000\n")
        print("Created .env with default settings.")


def main():
    check_env()
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
