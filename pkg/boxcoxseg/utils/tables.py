import csv
import json
import logging
import os

from boxcoxseg.utils.errors import RasterError


def format_real(value) -> str:
    """Writes a real as the shortest decimal that reads back to the same double; None becomes an empty cell"""
    if value is None:
        return ""
    return repr(float(value))


def parse_real(cell: str):
    """Reads a cell written by format_real"""
    if cell == "":
        return None
    return float(cell)


def write_rows_csv(path: str, fieldnames: list, rows: list):
    """Writes dictionaries as CSV rows in the given column order

    :param path: the destination file, parent directories are created
    :param fieldnames: the header
    :param rows: one dictionary of already formatted cells per row
    """
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
    except OSError as e:
        logging.critical("utils.tables.write_rows_csv could not write {0}".format(path))
        logging.exception(e)
        raise RasterError("could not write {0}: {1}".format(path, e)) from e


def read_rows_csv(path: str) -> list:
    """Reads a CSV written by write_rows_csv into a list of dictionaries of string cells"""
    try:
        with open(path, "r", newline="", encoding="utf-8") as f:
            return list(csv.DictReader(f))
    except OSError as e:
        logging.critical("utils.tables.read_rows_csv could not read {0}".format(path))
        logging.exception(e)
        raise RasterError("could not read {0}: {1}".format(path, e)) from e


def write_json(path: str, payload: dict):
    """Writes a JSON document with sorted keys so identical payloads give identical files"""
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        logging.critical("utils.tables.write_json could not write {0}".format(path))
        logging.exception(e)
        raise RasterError("could not write {0}: {1}".format(path, e)) from e
