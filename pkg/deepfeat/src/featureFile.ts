/**
 * Shared binary feature-file format.
 *
 * Layout (little-endian): magic "KPFT", version uint16, count uint32,
 * dim uint32, then count*dim float32 values row-major. Class labels live
 * in a text sidecar (feature path + ".labels") with one "id,class_label"
 * line per row, in row order. The evaluation harness on the Python side
 * parses exactly this layout.
 */

import * as fs from 'fs'

export const MAGIC = 'KPFT'
export const VERSION = 1
const HEADER_BYTES = 4 + 2 + 4 + 4

export interface FeatureSet {
  count: number
  dim: number
  /** row-major, length count*dim */
  values: Float32Array
  ids: string[]
  labels: number[]
}

export function labelsPathFor(featurePath: string): string {
  return featurePath + '.labels'
}

export function encodeFeatureFile(set: FeatureSet): Buffer {
  const { count, dim, values } = set
  if (values.length !== count * dim) {
    throw new Error(`expected ${count * dim} values, got ${values.length}`)
  }
  const buf = Buffer.alloc(HEADER_BYTES + count * dim * 4)
  buf.write(MAGIC, 0, 'ascii')
  buf.writeUInt16LE(VERSION, 4)
  buf.writeUInt32LE(count, 6)
  buf.writeUInt32LE(dim, 10)
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(values[i], HEADER_BYTES + 4 * i)
  }
  return buf
}

export function encodeLabelsSidecar(set: FeatureSet): string {
  if (set.ids.length !== set.count || set.labels.length !== set.count) {
    throw new Error('ids and labels must match the row count')
  }
  const seen = new Set<string>()
  let lines = ''
  for (let i = 0; i < set.count; i++) {
    const id = set.ids[i]
    if (id.includes(',') || id.includes('\n')) {
      throw new Error(`id ${JSON.stringify(id)} may not contain ',' or newline`)
    }
    if (seen.has(id)) {
      throw new Error(`duplicate id ${JSON.stringify(id)}`)
    }
    seen.add(id)
    lines += `${id},${set.labels[i]}\n`
  }
  return lines
}

export function writeFeatureFile(path: string, set: FeatureSet): void {
  fs.writeFileSync(path, encodeFeatureFile(set))
  fs.writeFileSync(labelsPathFor(path), encodeLabelsSidecar(set), 'utf-8')
}

/** Parse a feature file plus its sidecar (used by the tests to verify what
 * we wrote without involving the Python side). */
export function readFeatureFile(path: string): FeatureSet {
  const buf = fs.readFileSync(path)
  if (buf.length < HEADER_BYTES || buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`${path}: bad magic at offset 0`)
  }
  const version = buf.readUInt16LE(4)
  if (version !== VERSION) {
    throw new Error(`${path}: unsupported version ${version}`)
  }
  const count = buf.readUInt32LE(6)
  const dim = buf.readUInt32LE(10)
  if (buf.length !== HEADER_BYTES + count * dim * 4) {
    throw new Error(
      `${path}: body should be ${count * dim * 4} bytes, file has ${buf.length - HEADER_BYTES}`,
    )
  }
  const values = new Float32Array(count * dim)
  for (let i = 0; i < values.length; i++) {
    values[i] = buf.readFloatLE(HEADER_BYTES + 4 * i)
  }
  const sidecar = fs.readFileSync(labelsPathFor(path), 'utf-8')
  const ids: string[] = []
  const labels: number[] = []
  for (const line of sidecar.split('\n')) {
    if (!line.trim()) continue
    const cut = line.lastIndexOf(',')
    if (cut < 0) throw new Error(`${path}.labels: bad line ${JSON.stringify(line)}`)
    ids.push(line.slice(0, cut))
    labels.push(Number.parseInt(line.slice(cut + 1), 10))
  }
  if (ids.length !== count) {
    throw new Error(`${path}.labels: ${ids.length} lines for ${count} rows`)
  }
  return { count, dim, values, ids, labels }
}
