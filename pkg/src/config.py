"""Configuration module for the application."""
import hashlib
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Application configuration."""

    # Bulletin board
    BULLETIN_DIR = os.getenv("MSSGAS_BULLETIN_DIR", "bulletin")

    # Scheme defaults (a config file may override them)
    HASH = os.getenv("MSSGAS_HASH", "sha256")
    MODE = os.getenv("MSSGAS_MODE", "hash")
    PRIME_BITS = int(os.getenv("MSSGAS_PRIME_BITS", "256"))
    CAPACITY_FACTOR = int(os.getenv("MSSGAS_CAPACITY_FACTOR", "2"))

    # Logging
    LOG_LEVEL = os.getenv("MSSGAS_LOG_LEVEL", "WARNING").upper()

    @classmethod
    def validate(cls):
        """Validate configuration."""
        problems = []
        if cls.HASH not in hashlib.algorithms_available:
            problems.append(f"MSSGAS_HASH={cls.HASH!r} is not a known hash algorithm")
        if cls.MODE not in ("hash", "dlog"):
            problems.append(f"MSSGAS_MODE={cls.MODE!r} must be 'hash' or 'dlog'")
        if cls.PRIME_BITS < 3:
            problems.append("MSSGAS_PRIME_BITS must be at least 3")
        if cls.CAPACITY_FACTOR < 1:
            problems.append("MSSGAS_CAPACITY_FACTOR must be at least 1")
        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            problems.append(f"MSSGAS_LOG_LEVEL={cls.LOG_LEVEL!r} is not a logging level")

        if problems:
            raise ValueError(
                f"Invalid configuration: {'; '.join(problems)}"
            )

    @classmethod
    def get_logging_config(cls):
        """Get logging configuration for the command-line frontend."""
        return {
            "level": cls.LOG_LEVEL,
            "format": "%(levelname)s %(name)s: %(message)s",
        }
