import type {
  ApiError,
  AssetJson,
  AuditJson,
  BlockJson,
  ChainVerifyJson,
  DocumentJson,
  MempoolJson,
  MrJson,
  PeersJson,
  UsersJson,
  ValidatorsJson,
  VerifyQrJson,
} from "./types.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

/** Raised for any non-2xx API reply; carries the node's error code verbatim. */
export class NodeApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    public readonly endpoint: string,
    public readonly token: string,
    private readonly fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = {
      method,
      headers: { Authorization: `Bearer ${this.token}` },
    };
    if (body !== undefined) {
      init.headers = { ...init.headers, "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.endpoint + path, init);
    const doc = await resp.json();
    if (!resp.ok) {
      const err = doc as ApiError;
      throw new NodeApiError(resp.status, err.error ?? String(resp.status), err.detail ?? "");
    }
    return doc as T;
  }

  head(): Promise<BlockJson> {
    return this.request("GET", "/api/blocks/head");
  }

  block(height: number): Promise<BlockJson> {
    return this.request("GET", `/api/blocks/${height}`);
  }

  submitTx(txType: string, payload: unknown): Promise<{ tx_id: string; status: string }> {
    return this.request("POST", "/api/tx", { tx_type: txType, payload });
  }

  document(ref: string): Promise<DocumentJson> {
    return this.request("GET", `/api/documents/${ref}`);
  }

  asset(uid: string): Promise<AssetJson> {
    return this.request("GET", `/api/assets/${encodeURIComponent(uid)}`);
  }

  assetHistory(uid: string): Promise<{ asset_uid: string; history: MrJson[] }> {
    return this.request("GET", `/api/assets/${encodeURIComponent(uid)}/history`);
  }

  qrPngUrl(uid: string): string {
    return `${this.endpoint}/api/assets/${encodeURIComponent(uid)}/qr.png`;
  }

  verifyQr(payload: string): Promise<VerifyQrJson> {
    return this.request("POST", "/api/verify-qr", { payload });
  }

  validators(): Promise<ValidatorsJson> {
    return this.request("GET", "/api/validators");
  }

  peers(): Promise<PeersJson> {
    return this.request("GET", "/api/peers");
  }

  users(): Promise<UsersJson> {
    return this.request("GET", "/api/users");
  }

  audit(): Promise<AuditJson> {
    return this.request("GET", "/api/audit");
  }

  mempool(): Promise<MempoolJson> {
    return this.request("GET", "/api/mempool");
  }

  chainVerify(): Promise<ChainVerifyJson> {
    return this.request("GET", "/api/chain/verify");
  }
}

/** Transaction references found by walking the committed chain.
 *
 * The chain is the only index the node exposes, so listings (my requests,
 * pending checklists, the asset registry) are built by collecting tx ids
 * from blocks and then reading each record back through its own endpoint.
 * Statuses are never derived here.
 */
export interface ChainRefs {
  prs: { txId: string; author: string }[];
  aocs: { txId: string; prRef: string }[];
  pos: { txId: string }[];
  dcs: { txId: string; poRef: string }[];
  assetUids: string[];
  height: number;
}

export async function scanChain(client: ApiClient): Promise<ChainRefs> {
  const tip = await client.head();
  const refs: ChainRefs = { prs: [], aocs: [], pos: [], dcs: [], assetUids: [], height: tip.height };
  for (let h = 0; h <= tip.height; h++) {
    const block = h === tip.height ? tip : await client.block(h);
    for (const tx of block.transactions) {
      if (tx.tx_type === "pr.submit.v1") refs.prs.push({ txId: tx.tx_id, author: tx.author_id });
      if (tx.tx_type === "aoc.submit.v1")
        refs.aocs.push({ txId: tx.tx_id, prRef: String(tx.payload["pr_ref"]) });
      if (tx.tx_type === "po.issue.v1") refs.pos.push({ txId: tx.tx_id });
      if (tx.tx_type === "delivery.record.v1")
        refs.dcs.push({ txId: tx.tx_id, poRef: String(tx.payload["po_ref"]) });
      if (tx.tx_type === "asset.register.v1") refs.assetUids.push(String(tx.payload["asset_uid"]));
    }
  }
  return refs;
}

/** Poll until a submitted tx shows up in a block; resolves to its height. */
export async function waitForCommit(
  client: ApiClient,
  txId: string,
  opts: { intervalMs?: number; attempts?: number; sleep?: (ms: number) => Promise<void> } = {},
): Promise<number> {
  const intervalMs = opts.intervalMs ?? 1000;
  const attempts = opts.attempts ?? 30;
  const sleep = opts.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  let from = 0;
  for (let i = 0; i < attempts; i++) {
    const tip = await client.head();
    for (let h = from; h <= tip.height; h++) {
      const block = h === tip.height ? tip : await client.block(h);
      if (block.transactions.some((t) => t.tx_id === txId)) return h;
    }
    from = tip.height + 1;
    await sleep(intervalMs);
  }
  throw new Error(`tx ${txId.slice(0, 16)} not committed after ${attempts} polls`);
}
