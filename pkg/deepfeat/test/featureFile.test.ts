import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'
import { afterAll, describe, expect, it } from 'vitest'
import {
  encodeFeatureFile,
  encodeLabelsSidecar,
  labelsPathFor,
  readFeatureFile,
  writeFeatureFile,
  type FeatureSet,
} from '../src/featureFile.js'

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'kpft-'))
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }))

function sampleSet(): FeatureSet {
  return {
    count: 3,
    dim: 2,
    values: new Float32Array([1.5, -2.25, 0.125, 3.5, -0.75, 10]),
    ids: ['a.tif', 'b.tif', 'c.tif'],
    labels: [0, 1, 1],
  }
}

describe('feature file encoding', () => {
  it('writes the header and little-endian float32 body', () => {
    const buf = encodeFeatureFile(sampleSet())
    expect(buf.toString('ascii', 0, 4)).toBe('KPFT')
    expect(buf.readUInt16LE(4)).toBe(1)
    expect(buf.readUInt32LE(6)).toBe(3)
    expect(buf.readUInt32LE(10)).toBe(2)
    expect(buf.length).toBe(14 + 3 * 2 * 4)
    expect(buf.readFloatLE(14)).toBe(1.5)
    expect(buf.readFloatLE(18)).toBe(-2.25)
  })

  it('zero rows produce a header-only file', () => {
    const buf = encodeFeatureFile({
      count: 0,
      dim: 7,
      values: new Float32Array(0),
      ids: [],
      labels: [],
    })
    expect(buf.length).toBe(14)
  })

  it('rejects mismatched value length', () => {
    const set = sampleSet()
    set.values = new Float32Array(5)
    expect(() => encodeFeatureFile(set)).toThrow(/expected 6 values/)
  })

  it('sidecar holds one id,label line per row', () => {
    expect(encodeLabelsSidecar(sampleSet())).toBe('a.tif,0\nb.tif,1\nc.tif,1\n')
  })

  it('rejects duplicate ids and ids with commas', () => {
    const dup = sampleSet()
    dup.ids = ['a', 'a', 'b']
    expect(() => encodeLabelsSidecar(dup)).toThrow(/duplicate/)
    const comma = sampleSet()
    comma.ids = ['a,b', 'c', 'd']
    expect(() => encodeLabelsSidecar(comma)).toThrow(/may not contain/)
  })

  it('round-trips through the reader', () => {
    const file = path.join(tmp, 'roundtrip.kpft')
    const set = sampleSet()
    writeFeatureFile(file, set)
    const back = readFeatureFile(file)
    expect(back.count).toBe(3)
    expect(back.dim).toBe(2)
    expect([...back.values]).toEqual([...set.values])
    expect(back.ids).toEqual(set.ids)
    expect(back.labels).toEqual(set.labels)
  })

  it('is byte-identical across writes', () => {
    const a = path.join(tmp, 'a.kpft')
    const b = path.join(tmp, 'b.kpft')
    writeFeatureFile(a, sampleSet())
    writeFeatureFile(b, sampleSet())
    expect(fs.readFileSync(a).equals(fs.readFileSync(b))).toBe(true)
    expect(fs.readFileSync(labelsPathFor(a)).equals(fs.readFileSync(labelsPathFor(b)))).toBe(
      true,
    )
  })
})
