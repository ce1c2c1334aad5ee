// Typed client for the geopin serve API.
//
// Estimate values are displayed exactly as the server serialized them, so
// alongside the parsed document the client keeps the raw response text and
// can extract a field's raw token from it (rawField). Re-stringifying a
// parsed number would not survive the trip: 1.39e-06 formats differently
// in Python and JavaScript.

export interface CameraDoc {
  id: string;
  model: string;
  width: number;
  height: number;
  params: Record<string, number>;
  extrinsics: Record<string, number>;
  fov_deg: number;
}

export interface TargetDoc {
  target_id: string;
  lat: number;
  lon: number;
  kind: string;
  source: string;
}

export interface AnnotationDoc {
  t: number;
  camera_id: string;
  px: number;
  py: number;
  target_id: string;
}

export interface FrameRef {
  t: number;
  url: string;
}

export interface SessionDoc {
  cameras: CameraDoc[];
  track_span: [number, number];
  fix_count: number;
  targets: TargetDoc[];
  options: Record<string, unknown>;
  annotations: AnnotationDoc[];
  frames: Record<string, FrameRef[]>;
}

export interface EstimateFlagsDoc {
  distance_mode: string;
  heading_mode: string;
  pose_mode: string;
  clamped: boolean;
  heading_held: boolean;
}

export interface EstimateDoc {
  target_id: string;
  t: number;
  camera_id: string;
  estimate: { lat: number; lon: number };
  d_m: number;
  bearing_deg: number;
  vehicle: { t: number; lat: number; lon: number; theta_car_deg: number; speed_mps: number };
  flags: EstimateFlagsDoc;
  error_m: number | null;
  true_distance_m: number | null;
}

export interface GeolocateBody {
  camera_id: string;
  t: number;
  px: number;
  py: number;
  target_id?: string;
}

// Minimal structural view of fetch so tests can stub it without a DOM lib.
export interface ApiResponse {
  ok: boolean;
  status: number;
  text(): Promise<string>;
}

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<ApiResponse>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public errorName: string,
    message: string,
  ) {
    super(message);
  }
}

function defaultFetch(): FetchLike {
  return (url, init) => fetch(url, init);
}

async function checkedText(resp: ApiResponse): Promise<string> {
  const raw = await resp.text();
  if (resp.ok) {
    return raw;
  }
  let name = `http_${resp.status}`;
  let message = raw;
  try {
    const doc = JSON.parse(raw);
    if (typeof doc.error === "string") name = doc.error;
    if (typeof doc.message === "string") message = doc.message;
  } catch {
    // non-JSON error body, keep the raw text as the message
  }
  throw new ApiError(resp.status, name, message);
}

export async function getSession(fetchFn: FetchLike = defaultFetch()): Promise<SessionDoc> {
  const resp = await fetchFn("/api/session");
  return JSON.parse(await checkedText(resp));
}

export interface GeolocateResult {
  doc: EstimateDoc;
  raw: string;
}

const JSON_HEADERS = { "content-type": "application/json" };

export async function postGeolocate(
  body: GeolocateBody,
  fetchFn: FetchLike = defaultFetch(),
): Promise<GeolocateResult> {
  const resp = await fetchFn("/api/geolocate", {
    method: "POST",
    headers: JSON_HEADERS,
    body: JSON.stringify(body),
  });
  const raw = await checkedText(resp);
  return { doc: JSON.parse(raw), raw };
}

export async function postAnnotation(
  body: Required<GeolocateBody>,
  fetchFn: FetchLike = defaultFetch(),
): Promise<AnnotationDoc & { count: number }> {
  const resp = await fetchFn("/api/annotations", {
    method: "POST",
    headers: JSON_HEADERS,
    body: JSON.stringify(body),
  });
  return JSON.parse(await checkedText(resp));
}

export async function getReport(fetchFn: FetchLike = defaultFetch()): Promise<unknown> {
  const resp = await fetchFn("/api/report");
  return JSON.parse(await checkedText(resp));
}

// Raw token of a scalar field in a JSON text, exactly as serialized.
// Walks string tokens with escape handling so a key occurring inside a
// string VALUE can never match; `occurrence` selects among repeated keys
// (0-based, document order).
export function rawField(text: string, key: string, occurrence = 0): string {
  let i = 0;
  let seen = 0;
  const n = text.length;
  while (i < n) {
    if (text[i] !== '"') {
      i += 1;
      continue;
    }
    i += 1;
    let token = "";
    while (i < n && text[i] !== '"') {
      if (text[i] === "\\") {
        token += text.slice(i, i + 2);
        i += 2;
      } else {
        token += text[i];
        i += 1;
      }
    }
    i += 1; // closing quote
    let j = i;
    while (j < n && " \t\r\n".includes(text[j]!)) j += 1;
    if (text[j] !== ":" || token !== key) {
      continue; // a string value, or some other key
    }
    i = j + 1;
    if (seen < occurrence) {
      seen += 1;
      continue;
    }
    while (i < n && " \t\r\n".includes(text[i]!)) i += 1;
    if (text[i] === '"') {
      let k = i + 1;
      while (k < n && text[k] !== '"') k += text[k] === "\\" ? 2 : 1;
      return text.slice(i, k + 1);
    }
    if (text[i] === "{" || text[i] === "[") {
      throw new Error(`field ${key} is not a scalar`);
    }
    let k = i;
    while (k < n && !",}] \t\r\n".includes(text[k]!)) k += 1;
    return text.slice(i, k);
  }
  throw new Error(`field ${key} not found`);
}
