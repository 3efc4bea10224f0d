import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv


@dataclass(frozen=True)
class Settings:
    output_dir: str = "./output"
    seed: int = 1234
    shots: int = 4000
    dt_ns: float = 0.2
    workers: int = 1
    log_level: str = "INFO"
    port: int = 5000
    debug: bool = False


def load_settings() -> Settings:
    """
    Read process settings from the environment (and a .env file if present)

    Returns:
        Settings with defaults for anything unset
    """
    load_dotenv()
    return Settings(
        output_dir=os.getenv('SIMULATOR_OUTPUT_DIR', './output'),
        seed=int(os.getenv('SIMULATOR_SEED', '1234')),
        shots=int(os.getenv('SIMULATOR_SHOTS', '4000')),
        dt_ns=float(os.getenv('SIMULATOR_DT_NS', '0.2')),
        workers=int(os.getenv('SIMULATOR_WORKERS', '1')),
        log_level=os.getenv('LOG_LEVEL', 'INFO').upper(),
        port=int(os.getenv('PORT', '5000')),
        debug=os.getenv('DEBUG', 'False').lower() == 'true',
    )


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
