import logging
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from boxcoxseg.models.image import GrayImage, LabelMask, Palette, RgbImage, to_gray
from boxcoxseg.utils.errors import RasterError


def _open_raster(path: str) -> Image.Image:
    """Opens and decodes a raster file, refusing anything but 8-bit modes

    :param path: the location of the PNG/PGM/PPM file
    :return: the decoded Pillow image
    """
    if not os.path.isfile(path):
        raise RasterError("raster {0} does not exist".format(path))
    try:
        with Image.open(path) as raster:
            raster.load()
            decoded = raster.copy()
    except (UnidentifiedImageError, OSError) as e:
        logging.critical("utils.raster could not decode {0}".format(path))
        logging.exception(e)
        raise RasterError("raster {0} could not be decoded: {1}".format(path, e)) from e
    if decoded.width < 1 or decoded.height < 1:
        raise RasterError("raster {0} has a zero dimension".format(path))
    return decoded


def load_rgb(path: str, promote_gray: bool = False) -> RgbImage:
    """Reads an 8-bit RGB raster

    Gray rasters are refused unless promote_gray is set, in which case the gray level is copied to all three
    channels. Paletted rasters are expanded to their RGB colours.

    :param path: the location of the PNG or PPM file
    :param promote_gray: whether single channel rasters are accepted as three equal channels
    :return: the decoded RgbImage
    """
    raster = _open_raster(path)
    if raster.mode == "P":
        raster = raster.convert("RGB")
    elif raster.mode == "L" and promote_gray:
        raster = raster.convert("RGB")
    if raster.mode != "RGB":
        raise RasterError("raster {0} has mode {1}; an 8-bit RGB raster is required".format(path, raster.mode))
    return RgbImage(np.asarray(raster, dtype=np.float64))


def load_gray(path: str) -> GrayImage:
    """Reads any supported 8-bit raster as a gray image; colour rasters go through the luminance conversion

    :param path: the location of the PNG/PGM/PPM file
    :return: the gray image in double precision
    """
    raster = _open_raster(path)
    if raster.mode == "L":
        return GrayImage(np.asarray(raster, dtype=np.float64))
    return to_gray(load_rgb(path))


def _mask_keys(raster: Image.Image, palette: Palette, path: str) -> np.ndarray:
    """Retrieves the per pixel integer keys a palette is matched against"""
    if palette.is_color:
        pixels = np.asarray(raster.convert("RGB"), dtype=np.int64)
        return (pixels[:, :, 0] << 16) | (pixels[:, :, 1] << 8) | pixels[:, :, 2]
    if raster.mode not in ("L", "P", "1"):
        raise RasterError("mask {0} has mode {1} but the palette holds gray values".format(path, raster.mode))
    if raster.mode in ("1", "P"):
        raster = raster.convert("L")
    return np.asarray(raster, dtype=np.int64)


def load_mask(path: str, palette: Palette) -> LabelMask:
    """Reads a ground truth or predicted mask and maps every pixel to its class label

    :param path: the location of the PGM or PNG mask
    :param palette: the mapping from pixel values to labels
    :return: the LabelMask
    """
    raster = _open_raster(path)
    keys = _mask_keys(raster, palette, path)
    lookup = {Palette.packed(key): label for key, label in palette.entries}
    distinct, inverse = np.unique(keys, return_inverse=True)
    unmapped = [int(value) for value in distinct if int(value) not in lookup]
    if unmapped:
        raise RasterError("mask {0} holds pixel values {1} that are not in the palette".format(path, unmapped[:8]))
    labels = np.array([lookup[int(value)] for value in distinct], dtype=np.int64)[inverse.ravel()]
    return LabelMask(labels.reshape(keys.shape), palette.num_classes, palette.class_names)


def _save(raster: Image.Image, path: str) -> None:
    """Writes a Pillow image, choosing the format from the file extension"""
    try:
        raster.save(path)
    except (OSError, ValueError, KeyError) as e:
        logging.critical("utils.raster could not write {0}".format(path))
        logging.exception(e)
        raise RasterError("could not write raster {0}: {1}".format(path, e)) from e


def quantize(img: GrayImage) -> np.ndarray:
    """Rounds real intensities to the 8-bit range used on export"""
    return np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)


def save_gray(img: GrayImage, path: str) -> None:
    """Exports a gray image as an 8-bit PNG or PGM; this is the only place intensities are quantized

    :param img: the image to write
    :param path: the destination, its extension picks the format
    """
    _save(Image.fromarray(quantize(img)), path)


def save_mask(mask: LabelMask, palette: Palette, path: str) -> None:
    """Exports a mask using the first palette value of each class

    Colour palettes produce a paletted PNG (or an RGB raster for PPM); gray palettes produce an 8-bit gray raster.

    :param mask: the labels to write
    :param palette: the palette the mask is written with
    :param path: the destination, its extension picks the format
    """
    if mask.num_classes > palette.num_classes:
        raise ValueError("mask has {0} classes but the palette only {1}".format(mask.num_classes, palette.num_classes))
    if not palette.is_color:
        values = np.array([palette.export_value(label) for label in range(palette.num_classes)], dtype=np.uint8)
        _save(Image.fromarray(values[mask.labels]), path)
        return
    colors = [palette.export_value(label) for label in range(palette.num_classes)]
    if path.lower().endswith((".ppm", ".pnm")):
        rgb = np.array(colors, dtype=np.uint8)[mask.labels]
        _save(Image.fromarray(rgb), path)
        return
    raster = Image.fromarray(mask.labels.astype(np.uint8))
    flat_palette = [channel for color in colors for channel in color]
    raster.putpalette(flat_palette + [0] * (768 - len(flat_palette)))
    _save(raster, path)
