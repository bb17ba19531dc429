/**
 * Image decoding: TIF (the dataset's native format) and PNG, to RGBA
 * bytes. Class membership is encoded in filenames as `<class>_<index>.<ext>`;
 * labels are indices into the sorted class-name list, matching the harness's
 * dataset loader.
 */

import * as fs from 'fs'
import * as path from 'path'
import { PNG } from 'pngjs'
import UTIF from 'utif'

export interface DecodedImage {
  width: number
  height: number
  /** RGBA, 4 bytes per pixel */
  rgba: Uint8Array
}

export interface ImageEntry {
  file: string
  id: string
  className: string
}

const EXTENSIONS = new Set(['.tif', '.tiff', '.png'])

export function decodeImageFile(file: string): DecodedImage {
  const ext = path.extname(file).toLowerCase()
  const buf = fs.readFileSync(file)
  if (ext === '.png') {
    const png = PNG.sync.read(buf)
    return { width: png.width, height: png.height, rgba: new Uint8Array(png.data) }
  }
  if (ext === '.tif' || ext === '.tiff') {
    const ifds = UTIF.decode(buf)
    if (!ifds.length) throw new Error(`${file}: no TIFF directories`)
    UTIF.decodeImage(buf, ifds[0])
    const rgba = UTIF.toRGBA8(ifds[0])
    return { width: ifds[0].width, height: ifds[0].height, rgba }
  }
  throw new Error(`${file}: unsupported extension ${ext}`)
}

/** All supported images directly under `dir`, sorted by filename. */
export function listImages(dir: string): ImageEntry[] {
  const entries = fs
    .readdirSync(dir)
    .filter((name) => EXTENSIONS.has(path.extname(name).toLowerCase()))
    .sort()
  return entries.map((name) => ({
    file: path.join(dir, name),
    id: name,
    className: name.split('_')[0],
  }))
}

/** Sorted class names -> integer labels, same rule as the Python loader. */
export function assignLabels(entries: ImageEntry[]): Map<string, number> {
  const names = [...new Set(entries.map((e) => e.className))].sort()
  return new Map(names.map((name, index) => [name, index]))
}
